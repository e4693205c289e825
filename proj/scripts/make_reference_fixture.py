#!/usr/bin/env python3
"""Record reference estimates for the toy fixture with semopy.

semopy is given the unbiased sample covariance (n - 1 denominator) and
n_samples = n - 1, so its chi-square n_samples * F_ML equals (n - 1) * F_ML and its
Fisher-information standard errors use the same 2 / (n - 1) scaling as sembench.

Usage: scripts/make_reference_fixture.py data/toy_dck_eck.model data/toy_simulated.csv \
           data/toy_reference.json
"""
import json
import sys

import pandas as pd
import semopy


def main(model_path, data_path, out_path):
    desc = open(model_path, encoding="utf-8").read()
    data = pd.read_csv(data_path)
    observed = [c for c in data.columns if c != "model"]
    n = len(data)
    cov = data[observed].cov()  # n - 1 denominator

    model = semopy.Model(desc)
    result = model.fit(cov=cov, n_samples=n - 1, obj="MLW")
    stats = semopy.calc_stats(model).T["Value"]
    est = model.inspect(std_est=True)

    params = []
    for _, row in est.iterrows():
        if row["Estimate"] == 1.0 and row["Std. Err"] == "-":
            continue  # fixed marker loading
        op = row["op"]
        lhs, rhs = row["lval"], row["rval"]
        if op == "~":  # semopy lists measurement as indicator ~ latent
            label = f"{rhs}=~{lhs}"
        else:
            label = f"{lhs}~~{rhs}"
        params.append({
            "label": label,
            "estimate": float(row["Estimate"]),
            "se": float(row["Std. Err"]),
            "std": float(row["Est. Std"]),
        })

    out = {
        "tool": f"semopy {semopy.__version__}",
        "objective": "MLW",
        "note": "semopy fitted on the n-1 covariance with n_samples = n - 1",
        "n": n,
        "fmin": float(result.fun),
        "chi2": float(stats["chi2"]),
        "df": int(stats["DoF"]),
        "baseline_chi2": float(stats["chi2 Baseline"]),
        "baseline_df": int(stats["DoF Baseline"]),
        "cfi": float(stats["CFI"]),
        "rmsea": float(stats["RMSEA"]),
        "parameters": params,
    }
    with open(out_path, "w", encoding="utf-8") as f:
        json.dump(out, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main(*sys.argv[1:4])
