//! Programs that interleave pure values with requests to an effect vocabulary.
//!
//! A [`Program<E, A>`] is a chain of effect requests of type `E`, each followed
//! by a continuation, ending in a value of type `A`. Nothing happens until the
//! program is [interpreted](Program::interpret) by a handler that maps each
//! effect to its result.
//!
//! Intermediate results are type-erased ([`Value`]): the handler produces a
//! boxed value and the continuation recovers the concrete type. A mismatch is a
//! bug in whoever built the effect, so it panics rather than being reported as
//! a protocol error.
//!
//! Binding is constant time and interpretation runs in a loop over an explicit
//! continuation stack, so programs with millions of sequential effects (or
//! unbounded request loops written as recursion) do not grow the call stack.

use std::any::{type_name, Any};
use std::fmt;
use std::marker::PhantomData;

/// A type-erased intermediate result.
pub type Value = Box<dyn Any + Send>;

type Kont<E> = Box<dyn FnOnce(Value) -> Node<E> + Send>;

enum Node<E> {
    Pure(Value),
    Perform(E),
    FlatMap(Box<Node<E>>, Kont<E>),
    /// Feed a value into a captured continuation stack (top of stack last).
    Resume(Value, Vec<Kont<E>>),
}

pub(crate) fn downcast<T: Any>(value: Value) -> T {
    match value.downcast::<T>() {
        Ok(v) => *v,
        Err(_) => panic!(
            "effect result type mismatch: expected `{}`",
            type_name::<T>()
        ),
    }
}

/// Unfold binds until the program either finishes or needs an effect.
fn unfold<E>(mut node: Node<E>) -> RawStep<E> {
    let mut stack: Vec<Kont<E>> = Vec::new();
    loop {
        node = match node {
            Node::Pure(v) => match stack.pop() {
                None => return RawStep::Done(v),
                Some(k) => k(v),
            },
            Node::Perform(e) => return RawStep::Perform(e, stack),
            Node::FlatMap(inner, k) => {
                stack.push(k);
                *inner
            }
            Node::Resume(v, mut conts) => {
                if stack.is_empty() {
                    stack = conts;
                } else {
                    stack.append(&mut conts);
                }
                Node::Pure(v)
            }
        };
    }
}

enum RawStep<E> {
    Done(Value),
    Perform(E, Vec<Kont<E>>),
}

/// A computation over effects `E` producing an `A`.
pub struct Program<E, A> {
    node: Node<E>,
    _result: PhantomData<fn() -> A>,
}

/// One unfolding of a [`Program`]: either the final value or the next effect
/// together with the rest of the program.
pub enum Step<E, A> {
    Done(A),
    Perform(E, Continuation<E, A>),
}

/// The rest of a program after an effect, waiting for that effect's result.
pub struct Continuation<E, A> {
    stack: Vec<Kont<E>>,
    _result: PhantomData<fn() -> A>,
}

impl<E, A> Continuation<E, A> {
    /// Resume with the result of the pending effect.
    pub fn resume(self, value: Value) -> Program<E, A> {
        Program::from_node(Node::Resume(value, self.stack))
    }

    /// Run `program` first, then resume with whatever it returns.
    pub fn resume_after(self, program: ErasedProgram<E>) -> Program<E, A>
    where
        E: Send + 'static,
    {
        let stack = self.stack;
        Program::from_node(Node::FlatMap(
            Box::new(program.node),
            Box::new(move |v| Node::Resume(v, stack)),
        ))
    }
}

impl<E, A> fmt::Debug for Continuation<E, A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Continuation")
            .field("frames", &self.stack.len())
            .finish()
    }
}

impl<E, A> Program<E, A> {
    fn from_node(node: Node<E>) -> Self {
        Program {
            node,
            _result: PhantomData,
        }
    }

    /// Forget the result type. The final value stays boxed as an `A`.
    pub fn erase(self) -> ErasedProgram<E> {
        ErasedProgram { node: self.node }
    }
}

impl<E: Send + 'static, A: Send + 'static> Program<E, A> {
    /// A program that performs no effect and returns `value`.
    pub fn pure(value: A) -> Self {
        Self::from_node(Node::Pure(Box::new(value)))
    }

    /// A program that performs `effect` once and returns its result.
    ///
    /// The handler must answer `effect` with a boxed `A`.
    pub fn perform(effect: E) -> Self {
        Self::from_node(Node::Perform(effect))
    }

    /// Sequence `self` before `k`.
    pub fn bind<B, F>(self, k: F) -> Program<E, B>
    where
        B: Send + 'static,
        F: FnOnce(A) -> Program<E, B> + Send + 'static,
    {
        Program::from_node(Node::FlatMap(
            Box::new(self.node),
            Box::new(move |v| k(downcast::<A>(v)).node),
        ))
    }

    pub fn map<B, F>(self, f: F) -> Program<E, B>
    where
        B: Send + 'static,
        F: FnOnce(A) -> B + Send + 'static,
    {
        self.bind(move |a| Program::pure(f(a)))
    }

    /// Sequence `self` before `next`, discarding the result of `self`.
    pub fn then<B: Send + 'static>(self, next: Program<E, B>) -> Program<E, B> {
        self.bind(move |_| next)
    }

    /// Unfold the program to its first effect.
    pub fn step(self) -> Step<E, A> {
        match unfold(self.node) {
            RawStep::Done(v) => Step::Done(downcast(v)),
            RawStep::Perform(e, stack) => Step::Perform(
                e,
                Continuation {
                    stack,
                    _result: PhantomData,
                },
            ),
        }
    }

    /// Fold `handler` over the program, in program order.
    ///
    /// The first handler error stops interpretation and is returned as is.
    pub fn interpret<Er, H>(self, mut handler: H) -> Result<A, Er>
    where
        H: FnMut(E) -> Result<Value, Er>,
    {
        let mut node = self.node;
        loop {
            match unfold(node) {
                RawStep::Done(v) => return Ok(downcast(v)),
                RawStep::Perform(e, stack) => node = Node::Resume(handler(e)?, stack),
            }
        }
    }
}

/// Shorthand for [`Program::pure`].
pub fn pure<E: Send + 'static, A: Send + 'static>(value: A) -> Program<E, A> {
    Program::pure(value)
}

/// Shorthand for [`Program::perform`].
pub fn perform<E: Send + 'static, A: Send + 'static>(effect: E) -> Program<E, A> {
    Program::perform(effect)
}

/// A [`Program`] whose result type has been forgotten.
///
/// Used where a program's result flows on as an intermediate [`Value`], such as
/// the branches of a conditional or the translation of one effect into another
/// vocabulary.
pub struct ErasedProgram<E> {
    node: Node<E>,
}

/// One unfolding of an [`ErasedProgram`].
pub enum ErasedStep<E> {
    Done(Value),
    Perform(E, ErasedContinuation<E>),
}

pub struct ErasedContinuation<E> {
    stack: Vec<Kont<E>>,
}

impl<E> ErasedContinuation<E> {
    pub fn resume(self, value: Value) -> ErasedProgram<E> {
        ErasedProgram {
            node: Node::Resume(value, self.stack),
        }
    }
}

impl<E: Send + 'static> ErasedProgram<E> {
    /// A program returning an already boxed value.
    pub fn from_value(value: Value) -> Self {
        ErasedProgram {
            node: Node::Pure(value),
        }
    }

    /// A program that performs `effect` and returns the handler's value as is.
    pub fn perform(effect: E) -> Self {
        ErasedProgram {
            node: Node::Perform(effect),
        }
    }

    /// Build the program only when interpretation reaches it.
    pub fn defer<F>(f: F) -> Self
    where
        F: FnOnce() -> ErasedProgram<E> + Send + 'static,
    {
        ErasedProgram {
            node: Node::FlatMap(
                Box::new(Node::Pure(Box::new(()))),
                Box::new(move |_| f().node),
            ),
        }
    }

    pub fn and_then<F>(self, k: F) -> Self
    where
        F: FnOnce(Value) -> ErasedProgram<E> + Send + 'static,
    {
        ErasedProgram {
            node: Node::FlatMap(Box::new(self.node), Box::new(move |v| k(v).node)),
        }
    }

    pub fn map_value<F>(self, f: F) -> Self
    where
        F: FnOnce(Value) -> Value + Send + 'static,
    {
        self.and_then(move |v| ErasedProgram::from_value(f(v)))
    }

    /// Recover the result type. A wrong `A` panics when the final value is read.
    pub fn downcast<A: Send + 'static>(self) -> Program<E, A> {
        Program::from_node(self.node)
    }

    pub fn step(self) -> ErasedStep<E> {
        match unfold(self.node) {
            RawStep::Done(v) => ErasedStep::Done(v),
            RawStep::Perform(e, stack) => ErasedStep::Perform(e, ErasedContinuation { stack }),
        }
    }
}

/// Do-notation for [`Program`]s.
///
/// ```
/// use choreo::effect::Program;
/// use choreo::mdo;
///
/// let p: Program<(), i32> = mdo! {
///     x <- Program::pure(20);
///     let y = x + 1;
///     _ <- Program::pure(());
///     Program::pure(y * 2)
/// };
/// assert_eq!(p.interpret(|_| -> Result<_, ()> { unreachable!() }), Ok(42));
/// ```
#[macro_export]
macro_rules! mdo {
    (let $p:pat = $e:expr ; $($rest:tt)+) => {{
        let $p = $e;
        $crate::mdo!($($rest)+)
    }};
    ($x:ident <- $e:expr ; $($rest:tt)+) => {
        $crate::effect::Program::bind($e, move |$x| $crate::mdo!($($rest)+))
    };
    (_ <- $e:expr ; $($rest:tt)+) => {
        $crate::effect::Program::bind($e, move |_| $crate::mdo!($($rest)+))
    };
    ($e:expr ; $($rest:tt)+) => {
        $crate::effect::Program::bind($e, move |_| $crate::mdo!($($rest)+))
    };
    ($e:expr) => { $e };
}
