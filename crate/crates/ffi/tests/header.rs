use std::path::Path;

const EXPORTS: &[&str] = &[
    "dv_last_error_message",
    "dv_matrix_from_points",
    "dv_matrix_from_rows",
    "dv_matrix_load_csv",
    "dv_matrix_free",
    "dv_matrix_len",
    "dv_evaluate",
    "dv_contributions",
    "dv_select",
    "dv_graph_new",
    "dv_graph_add_edge",
    "dv_graph_free",
    "dv_clique_via_energy",
    "dv_hausdorff",
    "dv_ttest",
    "dv_noah_run",
    "dv_trace_free",
    "dv_trace_len",
    "dv_trace_record",
    "dv_trace_population",
];

#[test]
fn header_declares_every_export() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/diversity.h");
    let text = std::fs::read_to_string(&path).expect("header generated by build script");
    assert!(text.contains("#ifndef DIVERSITY_H"));
    assert!(
        text.contains("typedef struct DvMatrix DvMatrix;"),
        "handles must stay opaque"
    );
    for name in EXPORTS {
        assert!(text.contains(&format!("{name}(")), "missing {name}");
    }
    assert!(text.contains("DV_STATUS_PANIC = 5"));
}
