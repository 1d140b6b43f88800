use std::collections::BTreeMap;
use std::fmt;

use evalexpr::{
    build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node, Value,
};

use crate::error::{Error, Result};
use crate::mesh::{EdgeTag, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Field {
    Velocity,
    FluidPressure,
    Displacement,
    Xi,
    Flux,
    Eta,
}

impl Field {
    pub const ALL: [Field; 6] = [
        Field::Velocity,
        Field::FluidPressure,
        Field::Displacement,
        Field::Xi,
        Field::Flux,
        Field::Eta,
    ];

    pub fn region(self) -> Region {
        match self {
            Field::Velocity | Field::FluidPressure => Region::Fluid,
            _ => Region::Porous,
        }
    }

    pub fn is_vector(self) -> bool {
        matches!(self, Field::Velocity | Field::Displacement | Field::Flux)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Field::Velocity => "v",
            Field::FluidPressure => "p_f",
            Field::Displacement => "U",
            Field::Xi => "xi",
            Field::Flux => "q",
            Field::Eta => "eta",
        }
    }
}

impl std::str::FromStr for Field {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Field::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown field `{s}` (v, p_f, U, xi, q, eta)"))
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which components of a field a strong condition fixes. Scalars only use `All`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Component {
    All,
    X,
    Y,
}

impl std::str::FromStr for Component {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "all" => Ok(Component::All),
            "x" => Ok(Component::X),
            "y" => Ok(Component::Y),
            other => Err(format!("unknown component `{other}` (all, x, y)")),
        }
    }
}

impl Component {
    pub fn covers(self, c: usize) -> bool {
        match self {
            Component::All => true,
            Component::X => c == 0,
            Component::Y => c == 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluidWall {
    NoSlip,
    TractionFree,
}

impl std::str::FromStr for FluidWall {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "noslip" => Ok(FluidWall::NoSlip),
            "traction_free" => Ok(FluidWall::TractionFree),
            other => Err(format!("unknown fluid wall treatment `{other}` (noslip, traction_free)")),
        }
    }
}

/// Inflow pressure p_in(x, y, t), either zero or a parsed expression.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum InflowPressure {
    #[default]
    Zero,
    Expression { source: String, tree: Node<DefaultNumericTypes> },
}

impl InflowPressure {
    /// Parses an expression in `x`, `y`, `t` (and the constant `pi`).
    pub fn parse(source: &str) -> Result<Self> {
        let tree = build_operator_tree::<DefaultNumericTypes>(source)
            .map_err(|e| Error::Parameter(format!("p_in expression `{source}`: {e}")))?;
        let p = InflowPressure::Expression { source: source.to_string(), tree };
        // Probe once so unknown identifiers fail at configuration time.
        p.eval([0.0, 0.0], 0.0)?;
        Ok(p)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, InflowPressure::Zero)
    }

    pub fn eval(&self, point: [f64; 2], t: f64) -> Result<f64> {
        match self {
            InflowPressure::Zero => Ok(0.0),
            InflowPressure::Expression { source, tree } => {
                let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
                for (name, v) in [("x", point[0]), ("y", point[1]), ("t", t), ("pi", std::f64::consts::PI)] {
                    ctx.set_value(name.into(), Value::Float(v)).expect("fresh context accepts values");
                }
                tree.eval_number_with_context(&ctx)
                    .map_err(|e| Error::Parameter(format!("p_in expression `{source}`: {e}")))
            }
        }
    }
}

/// Strong (homogeneous) conditions per tag plus natural inflow data.
///
/// A field with no listed strong condition on a tag is treated naturally there.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundaryConditionSet {
    strong: BTreeMap<EdgeTag, Vec<(Field, Component)>>,
    pub p_in: InflowPressure,
}

impl BoundaryConditionSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a homogeneous strong condition on `tag`.
    pub fn fix(&mut self, tag: EdgeTag, field: Field, component: Component) -> Result<&mut Self> {
        if tag == EdgeTag::Interface {
            return Err(Error::Parameter("interface edges carry no strong conditions".into()));
        }
        if Some(field.region()) != tag.region() {
            return Err(Error::Parameter(format!("{field} does not live on {tag} edges")));
        }
        if !field.is_vector() && component != Component::All {
            return Err(Error::Parameter(format!("{field} is scalar; use component `all`")));
        }
        let list = self.strong.entry(tag).or_default();
        if !list.contains(&(field, component)) {
            list.push((field, component));
            list.sort();
        }
        Ok(self)
    }

    pub fn strong_on(&self, tag: EdgeTag) -> &[(Field, Component)] {
        self.strong.get(&tag).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Component mask of `field` fixed on `tag`.
    pub fn fixed_components(&self, tag: EdgeTag, field: Field) -> [bool; 2] {
        let mut mask = [false; 2];
        for &(f, c) in self.strong_on(tag) {
            if f == field {
                mask[0] |= c.covers(0);
                mask[1] |= c.covers(1);
            }
        }
        mask
    }

    pub fn is_fixed(&self, tag: EdgeTag, field: Field) -> bool {
        let m = self.fixed_components(tag, field);
        m[0] || m[1]
    }

    pub fn has_fluid_pressure_data(&self) -> bool {
        EdgeTag::ALL.iter().any(|&t| self.is_fixed(t, Field::FluidPressure))
    }

    /// Clears every condition on `tag` for `field`.
    pub fn release(&mut self, tag: EdgeTag, field: Field) {
        if let Some(list) = self.strong.get_mut(&tag) {
            list.retain(|&(f, _)| f != field);
        }
    }
}

/// Channel benchmark: everything clamped on the porous boundary, no-slip on the
/// fluid inlet and outlet, pressure pinned on the outlet.
pub fn boundary_set_test1(fluid_ext: FluidWall) -> BoundaryConditionSet {
    let mut bc = BoundaryConditionSet::new();
    let mut fix = |tag, field, comp| {
        bc.fix(tag, field, comp).expect("preset conditions are consistent");
    };
    for tag in [EdgeTag::PorousIn, EdgeTag::PorousOut, EdgeTag::PorousExt] {
        fix(tag, Field::Displacement, Component::All);
        fix(tag, Field::Flux, Component::All);
        fix(tag, Field::Xi, Component::All);
        fix(tag, Field::Eta, Component::All);
    }
    fix(EdgeTag::FluidIn, Field::Velocity, Component::All);
    fix(EdgeTag::FluidOut, Field::Velocity, Component::All);
    fix(EdgeTag::FluidOut, Field::FluidPressure, Component::All);
    if fluid_ext == FluidWall::NoSlip {
        fix(EdgeTag::FluidExt, Field::Velocity, Component::All);
    }
    bc
}

/// Injection scenario on the mapped channel: rollers on the porous sides,
/// clamped porous bottom, closed fluid inlet and walls, free fluid outlet.
pub fn boundary_set_test2() -> BoundaryConditionSet {
    let mut bc = BoundaryConditionSet::new();
    let mut fix = |tag, field, comp| {
        bc.fix(tag, field, comp).expect("preset conditions are consistent");
    };
    for tag in [EdgeTag::PorousIn, EdgeTag::PorousOut] {
        fix(tag, Field::Displacement, Component::X);
        fix(tag, Field::Flux, Component::X);
    }
    fix(EdgeTag::PorousExt, Field::Displacement, Component::All);
    fix(EdgeTag::PorousExt, Field::Flux, Component::All);
    fix(EdgeTag::FluidIn, Field::Velocity, Component::All);
    fix(EdgeTag::FluidExt, Field::Velocity, Component::All);
    bc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test1_porous_ext_clamps_everything() {
        let bc = boundary_set_test1(FluidWall::NoSlip);
        for f in [Field::Displacement, Field::Flux, Field::Xi, Field::Eta] {
            assert!(bc.is_fixed(EdgeTag::PorousExt, f));
            assert_eq!(bc.fixed_components(EdgeTag::PorousExt, f), [true, true]);
        }
    }

    #[test]
    fn interface_is_natural() {
        let bc = boundary_set_test1(FluidWall::NoSlip);
        assert!(bc.strong_on(EdgeTag::Interface).is_empty());
        let mut bc = bc;
        assert!(bc.fix(EdgeTag::Interface, Field::Velocity, Component::All).is_err());
    }

    #[test]
    fn test1_outlet() {
        let bc = boundary_set_test1(FluidWall::TractionFree);
        assert!(bc.is_fixed(EdgeTag::FluidOut, Field::Velocity));
        assert!(bc.is_fixed(EdgeTag::FluidOut, Field::FluidPressure));
        assert!(bc.has_fluid_pressure_data());
        assert!(!bc.is_fixed(EdgeTag::FluidExt, Field::Velocity));
        assert!(boundary_set_test1(FluidWall::NoSlip).is_fixed(EdgeTag::FluidExt, Field::Velocity));
    }

    #[test]
    fn rollers_fix_one_component() {
        let bc = boundary_set_test2();
        assert_eq!(bc.fixed_components(EdgeTag::PorousIn, Field::Displacement), [true, false]);
        assert!(!bc.has_fluid_pressure_data());
    }

    #[test]
    fn wrong_region_or_component_rejected() {
        let mut bc = BoundaryConditionSet::new();
        assert!(bc.fix(EdgeTag::FluidIn, Field::Xi, Component::All).is_err());
        assert!(bc.fix(EdgeTag::PorousIn, Field::Eta, Component::X).is_err());
    }

    #[test]
    fn inflow_expression() {
        let p = InflowPressure::parse("2 * t + x - y").unwrap();
        assert_eq!(p.eval([1.0, 3.0], 0.5).unwrap(), -1.0);
        let p = InflowPressure::parse("math::sin(pi * t)").unwrap();
        assert!((p.eval([0.0, 0.0], 0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!(InflowPressure::parse("2 * tt").is_err());
        assert!(InflowPressure::parse("2 +").is_err());
        assert_eq!(InflowPressure::default().eval([0.0, 0.0], 1.0).unwrap(), 0.0);
    }
}
