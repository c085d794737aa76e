// Book chapters compiled as doctests so their snippets stay in sync.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}
#[doc = include_str!("../../../book/src/lagrangians.md")]
mod lagrangians {}
#[doc = include_str!("../../../book/src/closed_form.md")]
mod closed_form {}
#[doc = include_str!("../../../book/src/oracle.md")]
mod oracle {}
#[doc = include_str!("../../../book/src/hamiltonian.md")]
mod hamiltonian {}
#[doc = include_str!("../../../book/src/published.md")]
mod published {}
#[doc = include_str!("../../../book/src/stages.md")]
mod stages {}
#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
#[doc = include_str!("../../../README.md")]
mod readme {}
