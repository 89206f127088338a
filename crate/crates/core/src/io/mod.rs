pub mod bookshelf;
pub mod case;
pub mod solution;
pub mod svg;

pub use bookshelf::{parse_bookshelf, BookshelfCircuit, BookshelfPaths};
pub use case::{load_case, CaseFile};
pub use solution::{read_solution, write_solution, LayerSummary, SolutionFile};
pub use svg::{render_svg, write_svg, SvgOptions};
