//! Two-player TrueSkill updates without draws.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrueSkill {
    pub mu0: f64,
    pub sigma0: f64,
    /// Performance noise.
    pub beta: f64,
    /// Dynamics noise added to σ² before each update.
    pub tau: f64,
}

impl Default for TrueSkill {
    fn default() -> Self {
        TrueSkill {
            mu0: 25.0,
            sigma0: 25.0 / 3.0,
            beta: 25.0 / 6.0,
            tau: 25.0 / 300.0,
        }
    }
}

impl TrueSkill {
    pub fn prior(&self) -> Rating {
        Rating {
            mu: self.mu0,
            sigma: self.sigma0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub mu: f64,
    pub sigma: f64,
}

impl Rating {
    /// μ − 3σ.
    pub fn conservative(&self) -> f64 {
        self.mu - 3.0 * self.sigma
    }
}

fn pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn cdf(t: f64) -> f64 {
    0.5 * erfc(-t / std::f64::consts::SQRT_2)
}

/// Additive mean correction `v(t) = φ(t) / Φ(t)`.
pub fn v_win(t: f64) -> f64 {
    let denom = cdf(t);
    if denom < 1e-300 {
        // Deep left tail: Mills-ratio asymptote.
        -t - 1.0 / t
    } else {
        pdf(t) / denom
    }
}

/// Multiplicative variance correction `w(t) = v(t) (v(t) + t)`.
pub fn w_win(t: f64) -> f64 {
    let v = v_win(t);
    (v * (v + t)).clamp(0.0, 1.0)
}

/// Updates the ratings of a winner and a loser.
pub fn trueskill_update_pair(winner: Rating, loser: Rating, p: &TrueSkill) -> (Rating, Rating) {
    let var_w = winner.sigma * winner.sigma + p.tau * p.tau;
    let var_l = loser.sigma * loser.sigma + p.tau * p.tau;
    let c2 = 2.0 * p.beta * p.beta + var_w + var_l;
    let c = c2.sqrt();
    let t = (winner.mu - loser.mu) / c;
    let (v, w) = (v_win(t), w_win(t));
    let new_w = Rating {
        mu: winner.mu + var_w / c * v,
        sigma: (var_w * (1.0 - var_w / c2 * w)).sqrt(),
    };
    let new_l = Rating {
        mu: loser.mu - var_l / c * v,
        sigma: (var_l * (1.0 - var_l / c2 * w)).sqrt(),
    };
    (new_w, new_l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_match_from_prior() {
        let p = TrueSkill {
            tau: 0.0,
            ..TrueSkill::default()
        };
        let (a, b) = trueskill_update_pair(p.prior(), p.prior(), &p);
        assert!((a.mu - 29.205).abs() < 1e-3, "{}", a.mu);
        assert!((b.mu - 20.795).abs() < 1e-3, "{}", b.mu);
        assert!((a.sigma - 7.194).abs() < 1e-3 && (b.sigma - 7.194).abs() < 1e-3);
    }

    #[test]
    fn tail_is_finite() {
        for t in [-60.0, -38.0, -10.0, 0.0, 10.0, 60.0] {
            let (v, w) = (v_win(t), w_win(t));
            assert!(v.is_finite() && v >= 0.0 && (0.0..=1.0).contains(&w), "{t}: {v} {w}");
        }
    }
}
