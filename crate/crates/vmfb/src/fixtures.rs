//! Bundled experiment configurations.

/// `(file name, contents)` of every bundled config.
pub const BUNDLED: &[(&str, &str)] = &[
    (
        "halfspace_projection.cfg",
        include_str!("../configs/halfspace_projection.cfg"),
    ),
    ("lasso_dim10.cfg", include_str!("../configs/lasso_dim10.cfg")),
    ("lasso_inexact.cfg", include_str!("../configs/lasso_inexact.cfg")),
    ("box_vi_dim5.cfg", include_str!("../configs/box_vi_dim5.cfg")),
    ("fixed_metric.cfg", include_str!("../configs/fixed_metric.cfg")),
    ("strongly_convex.cfg", include_str!("../configs/strongly_convex.cfg")),
    (
        "best_approximation.cfg",
        include_str!("../configs/best_approximation.cfg"),
    ),
    (
        "composite_elastic.cfg",
        include_str!("../configs/composite_elastic.cfg"),
    ),
    (
        "infeasible_best_approximation.cfg",
        include_str!("../configs/infeasible_best_approximation.cfg"),
    ),
    (
        "gamma_out_of_range.cfg",
        include_str!("../configs/gamma_out_of_range.cfg"),
    ),
    ("divergent_warn.cfg", include_str!("../configs/divergent_warn.cfg")),
    ("mu_understated.cfg", include_str!("../configs/mu_understated.cfg")),
    (
        "infeasible_scaling.cfg",
        include_str!("../configs/infeasible_scaling.cfg"),
    ),
];

/// Looks a bundled config up by file name, with or without the `.cfg` extension.
pub fn get(name: &str) -> Option<&'static str> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name || n.strip_suffix(".cfg") == Some(name))
        .map(|(_, text)| *text)
}
