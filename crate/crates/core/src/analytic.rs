//! Closed-form spread option pricers: Margrabe, Kirk, and skew-corrected Kirk.
//!
//! All three share one Black–Scholes shell on forwards: the spread call
//! `(F1 - F2 - K)+` is priced as a call on `F1` struck at the effective
//! strike `F2 + K`, discounted at `e^{-rT}`. Forwards are `Fi = si·e^{rT}`,
//! so at `r = 0` they coincide with spots.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::normal::norm_cdf;

/// Two-asset market state at valuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketInputs {
    pub s1_0: f64,
    pub s2_0: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
    pub r: f64,
}

impl MarketInputs {
    pub fn new(s1_0: f64, s2_0: f64, sigma1: f64, sigma2: f64, rho: f64, r: f64) -> Result<Self> {
        let m = MarketInputs {
            s1_0,
            s2_0,
            sigma1,
            sigma2,
            rho,
            r,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s1_0 > 0.0 && self.s1_0.is_finite()) {
            return Err(Error::invalid("s1", self.s1_0, "finite and > 0"));
        }
        if !(self.s2_0 > 0.0 && self.s2_0.is_finite()) {
            return Err(Error::invalid("s2", self.s2_0, "finite and > 0"));
        }
        if !(self.sigma1 >= 0.0 && self.sigma1.is_finite()) {
            return Err(Error::invalid("sigma1", self.sigma1, "finite and >= 0"));
        }
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return Err(Error::invalid("sigma2", self.sigma2, "finite and >= 0"));
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(Error::invalid("rho", self.rho, "in [-1, 1]"));
        }
        if !self.r.is_finite() {
            return Err(Error::invalid("r", self.r, "finite"));
        }
        Ok(())
    }

    pub fn with_rho(self, rho: f64) -> Self {
        MarketInputs { rho, ..self }
    }
}

impl Default for MarketInputs {
    /// Spots 100/100, vols 0.3/0.2, rho 0.9, zero rate.
    fn default() -> Self {
        MarketInputs {
            s1_0: 100.0,
            s2_0: 100.0,
            sigma1: 0.3,
            sigma2: 0.2,
            rho: 0.9,
            r: 0.0,
        }
    }
}

/// Strike and maturity of one spread call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contract {
    pub strike: f64,
    pub maturity: f64,
}

impl Contract {
    pub fn new(strike: f64, maturity: f64) -> Result<Self> {
        let c = Contract { strike, maturity };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strike >= 0.0 && self.strike.is_finite()) {
            return Err(Error::invalid("strike", self.strike, "finite and >= 0"));
        }
        validate_maturity(self.maturity)
    }
}

pub(crate) fn validate_maturity(maturity: f64) -> Result<()> {
    if !(maturity > 0.0 && maturity.is_finite()) {
        return Err(Error::invalid("maturity", maturity, "finite and > 0"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Margrabe,
    Kirk,
    ModifiedKirk,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Margrabe => "margrabe",
            Method::Kirk => "kirk",
            Method::ModifiedKirk => "modified-kirk",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "margrabe" => Ok(Method::Margrabe),
            "kirk" => Ok(Method::Kirk),
            "modified-kirk" | "modified_kirk" => Ok(Method::ModifiedKirk),
            other => Err(format!(
                "unknown method '{other}' (expected margrabe, kirk or modified-kirk)"
            )),
        }
    }
}

/// Intermediate quantities of the closed-form pricers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticTerms {
    pub method: Method,
    /// Kirk effective volatility.
    pub a_t: f64,
    /// Skew-corrected volatility; `None` where the correction is undefined.
    pub i_hat: Option<f64>,
    pub sigma_margrabe: f64,
    /// Moneyness ratio `F1 / (F2 + K)`.
    pub s_ratio: f64,
    pub x_t: f64,
    pub x_star: f64,
    /// Volatility used by `method`.
    pub vol: f64,
    pub d1: f64,
    pub d2: f64,
}

impl AnalyticTerms {
    pub fn compute(method: Method, market: &MarketInputs, contract: &Contract) -> Result<Self> {
        market.validate()?;
        contract.validate()?;
        let fwd = Forwards::new(market, contract.maturity);
        let strike = match method {
            Method::Margrabe => 0.0,
            _ => contract.strike,
        };
        let a_t = kirk_vol_unchecked(market, &fwd, strike);
        let i_hat = skew_corrected_vol(market, &fwd, strike, a_t).ok();
        let sigma_margrabe = effective_vol(market.sigma1, market.sigma2, market.rho, 1.0);
        let vol = match method {
            Method::Margrabe => sigma_margrabe,
            Method::Kirk => a_t,
            Method::ModifiedKirk => skew_corrected_vol(market, &fwd, strike, a_t)?,
        };
        let eff_strike = fwd.f2 + strike;
        let (d1, d2) = d_terms(fwd.f1 / eff_strike, vol, contract.maturity);
        Ok(AnalyticTerms {
            method,
            a_t,
            i_hat,
            sigma_margrabe,
            s_ratio: fwd.f1 / eff_strike,
            x_t: fwd.f1.ln(),
            x_star: eff_strike.ln(),
            vol,
            d1,
            d2,
        })
    }
}

struct Forwards {
    f1: f64,
    f2: f64,
    discount: f64,
}

impl Forwards {
    fn new(market: &MarketInputs, maturity: f64) -> Self {
        let growth = (market.r * maturity).exp();
        Forwards {
            f1: market.s1_0 * growth,
            f2: market.s2_0 * growth,
            discount: (-market.r * maturity).exp(),
        }
    }
}

/// `sqrt(σ1² − 2ρσ1σ2·u + σ2²·u²)`, clamped against rounding below zero.
fn effective_vol(sigma1: f64, sigma2: f64, rho: f64, u: f64) -> f64 {
    let radicand = sigma1 * sigma1 - 2.0 * rho * sigma1 * sigma2 * u + sigma2 * sigma2 * u * u;
    radicand.max(0.0).sqrt()
}

fn kirk_vol_unchecked(market: &MarketInputs, fwd: &Forwards, strike: f64) -> f64 {
    let u = fwd.f2 / (fwd.f2 + strike);
    effective_vol(market.sigma1, market.sigma2, market.rho, u)
}

fn skew_corrected_vol(market: &MarketInputs, fwd: &Forwards, strike: f64, a: f64) -> Result<f64> {
    let eff_strike = fwd.f2 + strike;
    let log_moneyness = fwd.f1.ln() - eff_strike.ln();
    let skew_weight = fwd.f2 * strike / (eff_strike * eff_strike);
    if skew_weight == 0.0 || log_moneyness == 0.0 {
        return Ok(a);
    }
    if a == 0.0 {
        return Err(Error::DegenerateKirkVolatility);
    }
    let u = fwd.f2 / eff_strike;
    let lever = market.sigma2 * u - market.rho * market.sigma1;
    let correction = 0.5 * lever * lever / (a * a * a)
        * (market.sigma2 * market.sigma2)
        * skew_weight
        * log_moneyness;
    let i_hat = a + correction;
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
    if !(i_hat > 0.0) {
        return Err(Error::CollapsedVolatility(i_hat));
    }
    Ok(i_hat)
}

fn d_terms(s_ratio: f64, vol: f64, maturity: f64) -> (f64, f64) {
    let log_s = s_ratio.ln();
    if vol == 0.0 {
        let d = if log_s >= 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        return (d, d);
    }
    let vol_sqrt_t = vol * maturity.sqrt();
    let d1 = (log_s + 0.5 * vol * vol * maturity) / vol_sqrt_t;
    (d1, d1 - vol_sqrt_t)
}

/// Discounted Black call on forward `f1` struck at `eff_strike`.
fn black_shell(f1: f64, eff_strike: f64, vol: f64, maturity: f64, discount: f64) -> f64 {
    if vol == 0.0 {
        return discount * (f1 - eff_strike).max(0.0);
    }
    let (d1, d2) = d_terms(f1 / eff_strike, vol, maturity);
    (discount * (f1 * norm_cdf(d1) - eff_strike * norm_cdf(d2))).max(0.0)
}

/// Margrabe price of the option to exchange asset 2 for asset 1.
pub fn margrabe_price(market: &MarketInputs, maturity: f64) -> Result<f64> {
    market.validate()?;
    validate_maturity(maturity)?;
    let vol = effective_vol(market.sigma1, market.sigma2, market.rho, 1.0);
    Ok(black_shell(market.s1_0, market.s2_0, vol, maturity, 1.0))
}

/// Kirk effective volatility `a_t`.
pub fn kirk_vol(market: &MarketInputs, contract: &Contract) -> Result<f64> {
    market.validate()?;
    contract.validate()?;
    let fwd = Forwards::new(market, contract.maturity);
    Ok(kirk_vol_unchecked(market, &fwd, contract.strike))
}

/// Kirk approximation of the spread call price.
pub fn kirk_price(market: &MarketInputs, contract: &Contract) -> Result<f64> {
    market.validate()?;
    contract.validate()?;
    let fwd = Forwards::new(market, contract.maturity);
    let a = kirk_vol_unchecked(market, &fwd, contract.strike);
    Ok(black_shell(
        fwd.f1,
        fwd.f2 + contract.strike,
        a,
        contract.maturity,
        fwd.discount,
    ))
}

/// Skew-corrected Kirk volatility `Î_t`.
///
/// Equals `kirk_vol` exactly when `K = 0` or the log-moneyness
/// `ln F1 − ln(F2 + K)` is zero.
pub fn modified_kirk_vol(market: &MarketInputs, contract: &Contract) -> Result<f64> {
    market.validate()?;
    contract.validate()?;
    let fwd = Forwards::new(market, contract.maturity);
    let a = kirk_vol_unchecked(market, &fwd, contract.strike);
    skew_corrected_vol(market, &fwd, contract.strike, a)
}

/// Kirk price with the skew-corrected volatility.
pub fn modified_kirk_price(market: &MarketInputs, contract: &Contract) -> Result<f64> {
    market.validate()?;
    contract.validate()?;
    let fwd = Forwards::new(market, contract.maturity);
    let a = kirk_vol_unchecked(market, &fwd, contract.strike);
    let vol = skew_corrected_vol(market, &fwd, contract.strike, a)?;
    Ok(black_shell(
        fwd.f1,
        fwd.f2 + contract.strike,
        vol,
        contract.maturity,
        fwd.discount,
    ))
}

/// Dispatches to the pricer for `method`. Margrabe ignores the strike.
pub fn price(method: Method, market: &MarketInputs, contract: &Contract) -> Result<f64> {
    match method {
        Method::Margrabe => margrabe_price(market, contract.maturity),
        Method::Kirk => kirk_price(market, contract),
        Method::ModifiedKirk => modified_kirk_price(market, contract),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn base(rho: f64) -> MarketInputs {
        MarketInputs::default().with_rho(rho)
    }

    fn contract(strike: f64) -> Contract {
        Contract::new(strike, 0.5).unwrap()
    }

    #[test]
    fn margrabe_zero_vol_limit() {
        let m = MarketInputs::new(110.0, 100.0, 0.2, 0.2, 1.0, 0.0).unwrap();
        assert_eq!(margrabe_price(&m, 0.5).unwrap(), 10.0);
    }

    #[test]
    fn margrabe_base_case() {
        let p = margrabe_price(&base(0.999), 0.5).unwrap();
        assert!((p - 2.837).abs() < 1e-3, "{p}");
        assert!((p - kirk_price(&base(0.999), &contract(0.0)).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn kirk_vol_cases() {
        let m = base(0.999);
        let margrabe_sigma = (0.09f64 - 2.0 * 0.999 * 0.06 + 0.04).sqrt();
        assert!((kirk_vol(&m, &contract(0.0)).unwrap() - margrabe_sigma).abs() < 1e-15);

        let riskless2 = MarketInputs { sigma2: 0.0, ..m };
        assert_eq!(kirk_vol(&riskless2, &contract(7.0)).unwrap(), 0.3);

        let u: f64 = 100.0 / 105.0;
        let expected = (0.09 - 2.0 * 0.999 * 0.06 * u + 0.04 * u * u).sqrt();
        let a = kirk_vol(&m, &contract(5.0)).unwrap();
        assert!((a - expected).abs() < 1e-15);
        // 30-digit evaluation of the same expression.
        assert!((a - 0.110044311833431).abs() < 1e-12, "{a}");
    }

    #[test]
    fn kirk_table_values() {
        let cases = [
            (5.0, 0.9, 2.3647228),
            (5.0, 0.999, 1.2862590),
            (10.0, 0.9, 1.2745318),
            (10.0, 0.999, 0.5615868),
        ];
        for (k, rho, want) in cases {
            let got = kirk_price(&base(rho), &contract(k)).unwrap();
            assert!((got - want).abs() < 1e-6, "K={k} rho={rho}: {got}");
        }
    }

    #[test]
    fn modified_kirk_table_values() {
        let cases = [
            (5.0, 0.9, 2.3626873),
            (5.0, 0.999, 1.27686463),
            (10.0, 0.9, 1.2681347),
            (10.0, 0.999, 0.54140923),
        ];
        for (k, rho, want) in cases {
            let got = modified_kirk_price(&base(rho), &contract(k)).unwrap();
            assert!((got - want).abs() < 1e-6, "K={k} rho={rho}: {got}");
        }
    }

    #[test]
    fn modified_vol_small_downward_correction() {
        let m = base(0.999);
        let a = kirk_vol(&m, &contract(5.0)).unwrap();
        let u: f64 = 100.0 / 105.0;
        let lever: f64 = 0.2 * u - 0.2997;
        let oracle = a + 0.5 * lever * lever / a.powi(3)
            * 0.04
            * (500.0 / 11025.0)
            * (100f64.ln() - 105f64.ln());
        let i_hat = modified_kirk_vol(&m, &contract(5.0)).unwrap();
        assert!((i_hat - oracle).abs() < 1e-15);
        assert!((i_hat - 0.109648138240313).abs() < 1e-12, "{i_hat}");
        assert!(i_hat < a);
    }

    #[test]
    fn modified_vol_identities() {
        let m = base(0.95);
        assert_eq!(
            modified_kirk_vol(&m, &contract(0.0)).unwrap(),
            kirk_vol(&m, &contract(0.0)).unwrap()
        );
        let atm = MarketInputs { s1_0: 105.0, ..m };
        assert_eq!(
            modified_kirk_vol(&atm, &contract(5.0)).unwrap(),
            kirk_vol(&atm, &contract(5.0)).unwrap()
        );
    }

    #[test]
    fn modified_vol_degenerate() {
        // sigma1 = sigma2·u with rho = 1 gives a = 0 exactly (u = 1/2 here).
        let m = MarketInputs::new(100.0, 100.0, 0.25, 0.5, 1.0, 0.0).unwrap();
        let c = contract(100.0);
        assert_eq!(kirk_vol(&m, &c).unwrap(), 0.0);
        assert!(matches!(
            modified_kirk_vol(&m, &c),
            Err(Error::DegenerateKirkVolatility)
        ));
        // Kirk itself falls back to the intrinsic value.
        assert_eq!(kirk_price(&m, &c).unwrap(), 0.0);
    }

    #[test]
    fn modified_vol_collapse() {
        // Out of the money with a tiny Kirk vol drives the correction below zero.
        let m = MarketInputs::new(100.0, 100.0, 0.27, 0.3, 1.0, 0.0).unwrap();
        let c = contract(10.0);
        assert!(kirk_vol(&m, &c).unwrap() < 0.003);
        assert!(matches!(
            modified_kirk_vol(&m, &c),
            Err(Error::CollapsedVolatility(_))
        ));
        assert!(modified_kirk_price(&m, &c).is_err());
    }

    #[test]
    fn terms_are_consistent() {
        let m = base(0.999);
        let c = contract(5.0);
        let t = AnalyticTerms::compute(Method::ModifiedKirk, &m, &c).unwrap();
        assert_eq!(t.vol, t.i_hat.unwrap());
        assert!((t.d2 - (t.d1 - t.vol * 0.5f64.sqrt())).abs() < 1e-15);
        assert_eq!(t.s_ratio, 100.0 / 105.0);
        assert_eq!(t.x_star, 105f64.ln());
        let k0 = AnalyticTerms::compute(Method::Kirk, &m, &contract(0.0)).unwrap();
        assert_eq!(k0.i_hat, Some(k0.a_t));
        assert_eq!(k0.a_t, k0.sigma_margrabe);
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(MarketInputs::new(0.0, 100.0, 0.3, 0.2, 0.9, 0.0).is_err());
        assert!(MarketInputs::new(100.0, 100.0, -0.1, 0.2, 0.9, 0.0).is_err());
        assert!(MarketInputs::new(100.0, 100.0, 0.3, 0.2, 1.01, 0.0).is_err());
        assert!(Contract::new(-1.0, 0.5).is_err());
        assert!(Contract::new(5.0, 0.0).is_err());
        assert!(margrabe_price(&base(0.9), -1.0).is_err());
        let bad = MarketInputs {
            rho: 2.0,
            ..base(0.9)
        };
        assert!(kirk_price(&bad, &contract(5.0)).is_err());
    }

    #[test]
    fn method_parses() {
        assert_eq!(
            "modified-kirk".parse::<Method>().unwrap(),
            Method::ModifiedKirk
        );
        assert!("black".parse::<Method>().is_err());
    }

    #[test]
    fn strictly_decreasing_in_strike() {
        for rho in [0.8, 0.85, 0.9, 0.95, 0.999] {
            let m = base(rho);
            let mut prev_k = f64::INFINITY;
            let mut prev_m = f64::INFINITY;
            for k in 0..=20 {
                let pk = kirk_price(&m, &contract(k as f64)).unwrap();
                let pm = modified_kirk_price(&m, &contract(k as f64)).unwrap();
                assert!(pk < prev_k && pm < prev_m, "rho={rho} K={k}");
                prev_k = pk;
                prev_m = pm;
            }
        }
    }

    fn market_strategy() -> impl Strategy<Value = MarketInputs> {
        (
            10.0..200.0f64,
            10.0..200.0f64,
            0.01..0.8f64,
            0.01..0.8f64,
            -1.0..=1.0f64,
            -0.05..0.1f64,
        )
            .prop_map(|(s1_0, s2_0, sigma1, sigma2, rho, r)| MarketInputs {
                s1_0,
                s2_0,
                sigma1,
                sigma2,
                rho,
                r,
            })
    }

    proptest! {
        #[test]
        fn reduction_chain(m in market_strategy(), t in 0.05..2.0f64) {
            let c = Contract::new(0.0, t).unwrap();
            let mg = margrabe_price(&m, t).unwrap();
            let k = kirk_price(&m, &c).unwrap();
            let mk = modified_kirk_price(&m, &c).unwrap();
            prop_assert!((k - mg).abs() <= 1e-12, "kirk {} margrabe {}", k, mg);
            prop_assert_eq!(mk, k);
        }

        #[test]
        fn no_arbitrage_bounds(
            rho in prop::sample::select(vec![0.8, 0.85, 0.9, 0.95, 0.999]),
            k in 0u32..=20,
            t in prop::sample::select(vec![0.1, 0.2, 0.3, 0.4, 0.5]),
            s1 in 80.0..120.0f64,
        ) {
            let m = MarketInputs { s1_0: s1, ..base(rho) };
            let c = Contract::new(k as f64, t).unwrap();
            let lower = (s1 - 100.0 - k as f64).max(0.0);
            for p in [kirk_price(&m, &c).unwrap(), modified_kirk_price(&m, &c).unwrap()] {
                prop_assert!(p >= lower - 1e-12 && p <= s1, "{} not in [{}, {}]", p, lower, s1);
            }
        }

        #[test]
        fn radicand_identity(
            s1 in 0.0..1.0f64, s2 in 0.0..1.0f64, rho in -1.0..=1.0f64, u in 0.0..=1.0f64,
        ) {
            let direct = s1 * s1 - 2.0 * rho * s1 * s2 * u + s2 * s2 * u * u;
            let squares = (s1 - rho * s2 * u).powi(2) + (1.0 - rho * rho) * s2 * s2 * u * u;
            prop_assert!((direct - squares).abs() <= 1e-14);
            prop_assert!(squares >= 0.0);
        }

        #[test]
        fn at_effective_money(m in market_strategy(), k in 0.0..30.0f64, t in 0.05..2.0f64) {
            // Forward at the effective strike: F1 = F2 + K.
            let m = MarketInputs { s1_0: m.s2_0 + k * (-m.r * t).exp(), ..m };
            let c = Contract::new(k, t).unwrap();
            let diff = modified_kirk_price(&m, &c).unwrap() - kirk_price(&m, &c).unwrap();
            prop_assert!(diff.abs() <= 1e-12);
        }
    }
}
