//! Minimal binding to the system UMFPACK library (64-bit index variant).

use std::os::raw::c_void;

const CONTROL: usize = 20;
const INFO: usize = 90;
const STRATEGY: usize = 5;
const IRSTEP: usize = 7;
const STRATEGY_SYMMETRIC: f64 = 3.0;
const SYS_TRANSPOSE: i64 = 1;
const INFO_RCOND: usize = 67;

#[link(name = "umfpack")]
extern "C" {
    fn umfpack_dl_defaults(control: *mut f64);
    fn umfpack_dl_symbolic(
        n_row: i64,
        n_col: i64,
        ap: *const i64,
        ai: *const i64,
        ax: *const f64,
        symbolic: *mut *mut c_void,
        control: *const f64,
        info: *mut f64,
    ) -> i64;
    fn umfpack_dl_numeric(
        ap: *const i64,
        ai: *const i64,
        ax: *const f64,
        symbolic: *mut c_void,
        numeric: *mut *mut c_void,
        control: *const f64,
        info: *mut f64,
    ) -> i64;
    fn umfpack_dl_solve(
        sys: i64,
        ap: *const i64,
        ai: *const i64,
        ax: *const f64,
        x: *mut f64,
        b: *const f64,
        numeric: *mut c_void,
        control: *const f64,
        info: *mut f64,
    ) -> i64;
    fn umfpack_dl_free_symbolic(symbolic: *mut *mut c_void);
    fn umfpack_dl_free_numeric(numeric: *mut *mut c_void);
}

/// LU factors of `A`, held as factors of `Aᵀ` in compressed-column form
/// (which is `A` in compressed-row form).
pub struct Factors {
    ap: Vec<i64>,
    ai: Vec<i64>,
    ax: Vec<f64>,
    numeric: *mut c_void,
    control: [f64; CONTROL],
    pub rcond: f64,
}

impl Factors {
    pub fn new(n: usize, row_ptr: &[usize], col_idx: &[usize], values: &[f64]) -> Result<Self, String> {
        let ap: Vec<i64> = row_ptr.iter().map(|&v| v as i64).collect();
        let ai: Vec<i64> = col_idx.iter().map(|&v| v as i64).collect();
        let ax = values.to_vec();
        let mut control = [0.0; CONTROL];
        let mut info = [0.0; INFO];
        let mut symbolic = std::ptr::null_mut();
        let mut numeric = std::ptr::null_mut();
        unsafe {
            umfpack_dl_defaults(control.as_mut_ptr());
            control[STRATEGY] = STRATEGY_SYMMETRIC;
            // refinement is done by the caller in terms of A
            control[IRSTEP] = 0.0;
            let s = umfpack_dl_symbolic(
                n as i64,
                n as i64,
                ap.as_ptr(),
                ai.as_ptr(),
                ax.as_ptr(),
                &mut symbolic,
                control.as_ptr(),
                info.as_mut_ptr(),
            );
            if s != 0 {
                umfpack_dl_free_symbolic(&mut symbolic);
                return Err(format!("symbolic analysis status {s}"));
            }
            let s = umfpack_dl_numeric(
                ap.as_ptr(),
                ai.as_ptr(),
                ax.as_ptr(),
                symbolic,
                &mut numeric,
                control.as_ptr(),
                info.as_mut_ptr(),
            );
            umfpack_dl_free_symbolic(&mut symbolic);
            if s != 0 {
                umfpack_dl_free_numeric(&mut numeric);
                return Err(format!("numeric factorization status {s} (rcond {:.3e})", info[INFO_RCOND]));
            }
        }
        Ok(Self { ap, ai, ax, numeric, control, rcond: info[INFO_RCOND] })
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, String> {
        let mut x = vec![0.0; b.len()];
        let mut info = [0.0; INFO];
        let s = unsafe {
            umfpack_dl_solve(
                SYS_TRANSPOSE,
                self.ap.as_ptr(),
                self.ai.as_ptr(),
                self.ax.as_ptr(),
                x.as_mut_ptr(),
                b.as_ptr(),
                self.numeric,
                self.control.as_ptr(),
                info.as_mut_ptr(),
            )
        };
        if s != 0 {
            return Err(format!("solve status {s}"));
        }
        Ok(x)
    }
}

impl Drop for Factors {
    fn drop(&mut self) {
        unsafe { umfpack_dl_free_numeric(&mut self.numeric) };
    }
}
