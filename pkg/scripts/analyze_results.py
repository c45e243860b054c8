"""
Script pour analyser le rapport d'une expérience (summary.csv).
"""
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

import argparse

import pandas as pd

from config import settings

METRICS = [
    "success_rate",
    "goal_completion",
    "violation_rate",
    "corr_rc_vs_rp_true",
    "corr_rc_vs_rc_true",
]

parser = argparse.ArgumentParser(description="Analyse d'un rapport d'expérience")
parser.add_argument("run_dir", type=Path, nargs="?", default=settings.runs_dir / "experiment",
                    help="Répertoire du rapport (contient summary.csv)")
args = parser.parse_args()

summary_path = args.run_dir / "summary.csv"
if not summary_path.exists():
    print(f"Rapport introuvable: {summary_path}")
    sys.exit(2)

df = pd.read_csv(summary_path)

print("=" * 80)
print("ANALYSE DU RAPPORT D'EXPÉRIENCE")
print("=" * 80)
print(f"\nNombre de runs: {len(df)}")
print(f"Familles: {sorted(df['env_family'].unique())}")
print(f"Méthodes: {sorted(df['method'].unique())}")
print(f"Graines: {sorted(df['seed'].unique())}")

print("\n" + "=" * 80)
print("MOYENNES PAR FAMILLE / MODE / MÉTHODE")
print("=" * 80)
table = df.groupby(["env_family", "mode", "method"])[METRICS].agg(["mean", "std"])
display = (
    "display.max_columns", None,
    "display.width", 200,
    "display.float_format", "{:.4f}".format,
)
with pd.option_context(*display):
    print(table)

print("\n" + "=" * 80)
print("CLASSEMENT PAR GRAINE (violation la plus basse, succès le plus haut)")
print("=" * 80)
for (family, mode), group in df.groupby(["env_family", "mode"]):
    by_seed = group.groupby("seed")
    lowest = group.loc[by_seed["violation_rate"].idxmin().dropna(), "method"].value_counts()
    highest = group.loc[by_seed["success_rate"].idxmax().dropna(), "method"].value_counts()
    print(f"\n{family}/{mode}")
    print(f"  Violation la plus basse: {dict(lowest)}")
    print(f"  Succès le plus haut:     {dict(highest)}")

errors_path = args.run_dir / "errors.csv"
if errors_path.exists():
    errors = pd.read_csv(errors_path)
    if len(errors):
        print("\n" + "=" * 80)
        print(f"ERREURS ({len(errors)})")
        print("=" * 80)
        print(errors.groupby(["stage", "error_type"]).size().to_string())
