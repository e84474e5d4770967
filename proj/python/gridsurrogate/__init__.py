"""Time-series N-1 contingency simulation with ML surrogate models.

The heavy lifting lives in the compiled extension; this package re-exports
its surface. Typical flow:

    import gridsurrogate as gs

    grid = gs.demo_grid("demo9")
    year = gs.make_synthetic_year(grid, steps=2000, seed=7)
    store = gs.run_sweep(grid, year, workers=4)
    ds = gs.build_dataset(grid, year, store, case_index=1, mode="regression")
    model = gs.train_surrogate(ds, kind="mlp", seed=7)
"""

from gridsurrogate._core import (  # noqa: F401
    Dataset,
    Grid,
    ParseError,
    PowerFlowSolution,
    SurrogateModel,
    SweepResultStore,
    TimeSeries,
    ValidationError,
    __version__,
    aggregate_bus_injections,
    apply_curtailment,
    build_admittance,
    build_dataset,
    classify_from_probability,
    classify_from_regression,
    classify_state,
    compute_metrics,
    confusion_counts,
    demo_grid,
    enumerate_cases,
    generate_scenarios,
    load_grid,
    load_time_series,
    make_synthetic_year,
    regression_errors,
    run_pipeline,
    run_sweep,
    smote_oversample,
    solve_power_flow,
    sorted_annual_curve,
    split_train_test,
    train_surrogate,
)

__all__ = [
    "Dataset",
    "Grid",
    "ParseError",
    "PowerFlowSolution",
    "SurrogateModel",
    "SweepResultStore",
    "TimeSeries",
    "ValidationError",
    "aggregate_bus_injections",
    "apply_curtailment",
    "build_admittance",
    "build_dataset",
    "classify_from_probability",
    "classify_from_regression",
    "classify_state",
    "compute_metrics",
    "confusion_counts",
    "demo_grid",
    "enumerate_cases",
    "generate_scenarios",
    "load_grid",
    "load_time_series",
    "make_synthetic_year",
    "regression_errors",
    "run_pipeline",
    "run_sweep",
    "smote_oversample",
    "solve_power_flow",
    "sorted_annual_curve",
    "split_train_test",
    "train_surrogate",
]
