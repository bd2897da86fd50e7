//! Architecture-model intermediate representation.
//!
//! A [`Model`] holds enum declarations and components; each component is
//! either atomic (behavior given by an automaton) or composite (a
//! sub-architecture of instances and connectors). Everything is immutable
//! after construction.

use crate::expr::{Expr, Span};
use crate::value::{TypeTag, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct EnumDecl {
    pub name: String,
    pub variants: Vec<String>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    In,
    Out,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Port {
    pub name: String,
    pub direction: Direction,
    pub ty: TypeTag,
    /// A delayed port emits last tick's computed value; at tick 1 it emits
    /// `initial`.
    pub delayed: bool,
    pub initial: Option<Value>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub name: String,
    pub ty: TypeTag,
    pub init: Value,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub id: String,
    pub source: String,
    pub target: String,
    pub guard: Expr,
    /// Assignments run in order; each sees the updates of the previous one.
    pub actions: Vec<(String, Expr)>,
    /// Emissions are evaluated after all actions.
    pub emissions: Vec<(String, Expr)>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Automaton {
    /// All state names in first-appearance order (initial state first).
    pub states: Vec<String>,
    pub initial: String,
    pub vars: Vec<VarDecl>,
    pub transitions: Vec<Transition>,
}

impl Automaton {
    pub fn outgoing<'a>(&'a self, state: &'a str) -> impl Iterator<Item = &'a Transition> {
        self.transitions.iter().filter(move |t| t.source == state)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Endpoint {
    /// A port of the enclosing component itself.
    Own(String),
    /// `instance.port`.
    Child(String, String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Connector {
    pub from: Endpoint,
    pub to: Endpoint,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubInstance {
    pub name: String,
    pub component: String,
    pub args: Vec<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositeBody {
    pub subs: Vec<SubInstance>,
    pub connectors: Vec<Connector>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Atomic(Automaton),
    Composite(CompositeBody),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub name: String,
    pub params: Vec<(String, TypeTag)>,
    pub ports: Vec<Port>,
    pub body: Body,
    pub span: Span,
}

impl Component {
    pub fn port(&self, name: &str) -> Option<&Port> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn in_ports(&self) -> impl Iterator<Item = &Port> {
        self.ports.iter().filter(|p| p.direction == Direction::In)
    }

    pub fn out_ports(&self) -> impl Iterator<Item = &Port> {
        self.ports.iter().filter(|p| p.direction == Direction::Out)
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self.body, Body::Atomic(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub enums: Vec<EnumDecl>,
    /// Declaration order is preserved for rendering.
    pub components: Vec<Component>,
    pub root: String,
}

impl Model {
    pub fn component(&self, name: &str) -> Option<&Component> {
        self.components.iter().find(|c| c.name == name)
    }

    pub fn root_component(&self) -> &Component {
        self.component(&self.root)
            .expect("root component must exist in a parsed model")
    }

    pub fn enum_decl(&self, name: &str) -> Option<&EnumDecl> {
        self.enums.iter().find(|e| e.name == name)
    }

    pub fn first_variant(&self, name: &str) -> Option<String> {
        self.enum_decl(name).and_then(|e| e.variants.first().cloned())
    }
}
