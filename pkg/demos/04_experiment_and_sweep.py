"""
Full experiment and seed sweep
==============================

With only 8 test rows a single split says little, so the sweep repeats
the experiment over 100 split seeds and reports the F1 spread per model
next to the published reference values. Output goes to demo_output/.
"""

from pathlib import Path

from fdm_uts.experiment import (
    ExperimentConfig,
    format_sweep_summary,
    format_table,
    run,
    summarize_sweep,
    sweep,
    write_outputs,
    write_sweep,
)

out = Path("demo_output")
config = ExperimentConfig()

# One run: every model on the seed-42 split, written to disk.
result = run(config)
print(format_table(result.report))
write_outputs(result, out / "run")
print("wrote", sorted(p.name for p in (out / "run").iterdir()))

# A sweep over seeds 0..99 (about half a minute on one core).
rows = sweep(config, range(100))
summary = summarize_sweep(rows)
print(format_sweep_summary(summary))
write_sweep(rows, summary, out / "sweep", with_k=False)

# KNN for several k on the same seeds.
rows_k = sweep(config, range(20), k_values=[1, 3, 5, 7, 9])
print(format_sweep_summary(summarize_sweep([r for r in rows_k if r[1] == "knn"])))
