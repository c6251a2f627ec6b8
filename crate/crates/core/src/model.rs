//! Opinion and physical state of a single agent and the vector fields that
//! drive them.
//!
//! The opinion `z` encodes task preference (`z > 0` favors patch 1, `z < 0`
//! patch 2). Its evolution is self-reinforcing through the attention gain
//! `u` and is coupled to the horizontal position `x` through the Gaussian
//! switch `η(z)`: with `|z|` large the agent navigates to random waypoints
//! inside its patch, with `|z|` small it heads for the origin and lets its
//! opinion follow its position.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Odd saturating function with `S(0) = 0`, `S'(0) = 1`.
///
/// Every field in the crate goes through this one function, so substituting
/// another saturation only needs a change here and in [`saturation_prime`].
#[inline]
pub fn saturation(z: f64) -> f64 {
    z.tanh()
}

#[inline]
pub fn saturation_prime(z: f64) -> f64 {
    let c = z.cosh();
    1.0 / (c * c)
}

/// Per-agent model constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentParams {
    /// Damping coefficient.
    pub d: f64,
    /// Attention gain.
    pub u: f64,
    /// Bias input. Overwritten every step by the efficiency map during a
    /// simulation.
    #[serde(default)]
    pub b: f64,
    /// Opinion coupling weight.
    pub k_z: f64,
    /// Gain of the x-velocity towards the waypoint.
    pub k_x: f64,
    /// Gain of the y-velocity towards the waypoint.
    pub k_y: f64,
    /// Weight of the opinion on the waypoint abscissa.
    pub k: f64,
    /// Width of the navigation/switching gate.
    pub sigma: f64,
    /// Distance from the outermost patch edge to the `x = 0` line.
    pub l: f64,
}

impl Default for AgentParams {
    fn default() -> Self {
        Self {
            d: 1.0,
            u: 1.3,
            b: 0.0,
            k_z: 2.0,
            k_x: 0.15,
            k_y: 0.15,
            k: 10.0,
            sigma: 0.1,
            l: 1.0,
        }
    }
}

impl AgentParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d", self.d),
            ("u", self.u),
            ("k_z", self.k_z),
            ("k_x", self.k_x),
            ("k_y", self.k_y),
            ("k", self.k),
            ("sigma", self.sigma),
            ("l", self.l),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite and strictly positive",
                });
            }
        }
        if !self.b.is_finite() {
            return Err(Error::InvalidParameter {
                name: "b",
                value: self.b,
                reason: "must be finite",
            });
        }
        Ok(())
    }

    /// Critical attention `u* = d` of the neutral equilibrium.
    pub fn critical_attention(&self) -> f64 {
        self.d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PatchId {
    #[serde(rename = "patch1")]
    One,
    #[serde(rename = "patch2")]
    Two,
}

impl PatchId {
    /// `+1` for patch 1 (favored by `z > 0`), `-1` for patch 2.
    pub fn sign(self) -> f64 {
        match self {
            PatchId::One => 1.0,
            PatchId::Two => -1.0,
        }
    }

    pub fn other(self) -> PatchId {
        match self {
            PatchId::One => PatchId::Two,
            PatchId::Two => PatchId::One,
        }
    }

    pub fn from_sign(v: f64) -> PatchId {
        if v >= 0.0 {
            PatchId::One
        } else {
            PatchId::Two
        }
    }

    pub fn number(self) -> u8 {
        match self {
            PatchId::One => 1,
            PatchId::Two => 2,
        }
    }
}

/// Where the agent physically is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Patch(PatchId),
    Transit,
}

impl std::fmt::Display for Membership {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Membership::Patch(p) => write!(f, "patch{}", p.number()),
            Membership::Transit => f.write_str("transit"),
        }
    }
}

/// Axis-aligned rectangular task region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub id: PatchId,
    pub x_bounds: (f64, f64),
    pub y_bounds: (f64, f64),
}

impl Patch {
    /// Two rectangles mirrored across `x = 0`: patch 1 spans `[inner, l]`,
    /// patch 2 spans `[-l, -inner]`.
    pub fn mirrored_pair(inner: f64, l: f64, y_bounds: (f64, f64)) -> Result<[Patch; 2]> {
        if !(inner >= 0.0 && inner < l) {
            return Err(Error::Validation(format!(
                "patch inner edge {inner} must lie in [0, l = {l})"
            )));
        }
        if !(y_bounds.0 < y_bounds.1) {
            return Err(Error::Validation("patch y bounds are empty".into()));
        }
        Ok([
            Patch {
                id: PatchId::One,
                x_bounds: (inner, l),
                y_bounds,
            },
            Patch {
                id: PatchId::Two,
                x_bounds: (-l, -inner),
                y_bounds,
            },
        ])
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_bounds.0 && x <= self.x_bounds.1 && y >= self.y_bounds.0 && y <= self.y_bounds.1
    }

    /// Largest `|x|` inside the patch.
    pub fn outer_bound(&self) -> f64 {
        self.x_bounds.0.abs().max(self.x_bounds.1.abs())
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.x_bounds.0 + self.x_bounds.1),
            0.5 * (self.y_bounds.0 + self.y_bounds.1),
        )
    }

    pub fn width(&self) -> f64 {
        self.x_bounds.1 - self.x_bounds.0
    }

    pub fn height(&self) -> f64 {
        self.y_bounds.1 - self.y_bounds.0
    }
}

/// Random point the agent is navigating to. Only `|r_x|` is kept because the
/// waypoint abscissa takes its sign from the opinion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub rho: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub z: f64,
    pub x: f64,
    pub y: f64,
    pub waypoint: Option<Waypoint>,
    pub membership: Membership,
}

impl AgentState {
    pub fn new(z: f64, x: f64, y: f64) -> Self {
        Self {
            z,
            x,
            y,
            waypoint: None,
            membership: Membership::Transit,
        }
    }

    /// `ρ` of the current waypoint, zero before the first one is drawn.
    pub fn rho(&self) -> f64 {
        self.waypoint.map_or(0.0, |w| w.rho)
    }

    /// Target ordinate; with no waypoint the agent holds its height.
    pub fn y_target(&self) -> f64 {
        self.waypoint.map_or(self.y, |w| w.y)
    }

    /// Current waypoint `(x̄(z), ȳ)`.
    pub fn target(&self, params: &AgentParams) -> Option<(f64, f64)> {
        self.waypoint.map(|w| (waypoint_x(params, self.z, w.rho), w.y))
    }

    pub fn is_finite(&self) -> bool {
        self.z.is_finite() && self.x.is_finite() && self.y.is_finite()
    }
}

/// `f̃(z) = -d z + u S(z) + b`.
pub fn uncoupled_opinion_field(params: &AgentParams, z: f64) -> f64 {
    -params.d * z + params.u * saturation(z) + params.b
}

/// Gaussian gate `η(z) = exp(-z² / 2σ²)`. Underflows to zero far from the
/// origin, which leaves the dynamics well defined.
#[inline]
pub fn switch_fn(z: f64, sigma: f64) -> f64 {
    (-z * z / (2.0 * sigma * sigma)).exp()
}

#[inline]
fn switch_fn_prime(z: f64, sigma: f64) -> f64 {
    -z / (sigma * sigma) * switch_fn(z, sigma)
}

/// Waypoint abscissa `x̄(z) = (ρ / l) tanh(k z)`.
pub fn waypoint_x(params: &AgentParams, z: f64, rho: f64) -> f64 {
    rho / params.l * (params.k * z).tanh()
}

fn waypoint_x_prime(params: &AgentParams, z: f64, rho: f64) -> f64 {
    let c = (params.k * z).cosh();
    rho / params.l * params.k / (c * c)
}

/// Uncoupled x-velocity `K_x (x̄(z) - x)`.
pub fn navigation_field(params: &AgentParams, z: f64, x: f64, rho: f64) -> f64 {
    params.k_x * (waypoint_x(params, z, rho) - x)
}

/// Coupled opinion and x-velocity `(ż, ẋ)`.
pub fn coupled_field(params: &AgentParams, z: f64, x: f64, rho: f64) -> (f64, f64) {
    let eta = switch_fn(z, params.sigma);
    let dz = uncoupled_opinion_field(params, z) - params.k_z * eta * (z - x);
    let dx = (1.0 - eta) * navigation_field(params, z, x, rho) - eta * (x - z);
    (dz, dx)
}

/// `ẏ = K_y (ȳ - y)`.
pub fn y_field(params: &AgentParams, y: f64, y_bar: f64) -> f64 {
    params.k_y * (y_bar - y)
}

/// Jacobian of [`coupled_field`] with respect to `(z, x)`, row-major.
pub fn coupled_jacobian(params: &AgentParams, z: f64, x: f64, rho: f64) -> [[f64; 2]; 2] {
    let eta = switch_fn(z, params.sigma);
    let eta_p = switch_fn_prime(z, params.sigma);
    let xb = waypoint_x(params, z, rho);
    let xb_p = waypoint_x_prime(params, z, rho);

    let f_z = -params.d + params.u * saturation_prime(z) - params.k_z * (eta_p * (z - x) + eta);
    let f_x = params.k_z * eta;
    let h_z = -eta_p * params.k_x * (xb - x) + (1.0 - eta) * params.k_x * xb_p - eta_p * (x - z) + eta;
    let h_x = -(1.0 - eta) * params.k_x - eta;
    [[f_z, f_x], [h_z, h_x]]
}

/// Scalar parameters the equilibria can be continued in or differentiated by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    U,
    B,
    #[serde(rename = "k_x")]
    Kx,
}

impl Param {
    pub fn get(self, params: &AgentParams) -> f64 {
        match self {
            Param::U => params.u,
            Param::B => params.b,
            Param::Kx => params.k_x,
        }
    }

    pub fn set(self, params: &mut AgentParams, value: f64) {
        match self {
            Param::U => params.u = value,
            Param::B => params.b = value,
            Param::Kx => params.k_x = value,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Param::U => "u",
            Param::B => "b",
            Param::Kx => "k_x",
        }
    }
}

impl std::str::FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "u" => Ok(Param::U),
            "b" => Ok(Param::B),
            "k_x" | "K_x" | "kx" => Ok(Param::Kx),
            other => Err(Error::Config(format!("unknown parameter `{other}`"))),
        }
    }
}

/// Partial derivative of the coupled field with respect to a parameter.
pub fn coupled_param_derivative(params: &AgentParams, param: Param, z: f64, x: f64, rho: f64) -> (f64, f64) {
    match param {
        Param::U => (saturation(z), 0.0),
        Param::B => (1.0, 0.0),
        Param::Kx => {
            let eta = switch_fn(z, params.sigma);
            (0.0, (1.0 - eta) * (waypoint_x(params, z, rho) - x))
        }
    }
}
