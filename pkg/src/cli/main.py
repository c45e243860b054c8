"""
Point d'entrée CLI du pipeline TCL.

Codes de sortie: 0 ok, 2 configuration, 3 infaisable, 4 solveur,
5 features introuvables.
"""

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from loguru import logger

from src.cli.commands import (
    cmd_demos,
    cmd_eval,
    cmd_experiment,
    cmd_learn,
    cmd_transfer,
    parse_task_reward,
)
from src.cli.config_schema import load_config
from src.exceptions import TclError
from src.utils.logging import configure_logging
from src.utils.validation import require_valid_settings

EPILOG = """
Exemples d'utilisation:
  # Générer 32 démonstrations sur l'environnement d'atteinte
  tcl demos --config data/configs/reaching.toml --n 32 --seed 7 --out data/runs/demos.json

  # Apprendre une contrainte avec la décomposition approchée (α = 1)
  tcl learn data/runs/demos.json --method tcl --rd approx --alpha 1 --out data/runs/model.json

  # Transférer vers un nouvel environnement avec une récompense de tâche
  tcl transfer data/runs/model.json --config data/configs/reaching.toml \\
      --task-reward "at_goal=1,goal_distance=-0.1" --seed 3 --out data/runs/rollouts.json

  # Calculer les métriques des trajectoires
  tcl eval data/runs/rollouts.json --out data/runs/metrics.csv

  # Expérience complète (toutes méthodes, toutes suites)
  tcl experiment data/configs/wall_transfer.toml --jobs 4
"""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tcl",
        description="Apprentissage de contraintes transférables par décomposition de récompense",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=EPILOG,
    )
    parser.add_argument(
        "--log-level", default=None, help="Niveau de log (défaut: settings.log_level)"
    )
    parser.add_argument("--log-file", type=Path, default=None, help="Fichier de log optionnel")

    subparsers = parser.add_subparsers(dest="command", help="Commande à exécuter")

    demos_parser = subparsers.add_parser("demos", help="Générer des démonstrations expertes")
    demos_parser.add_argument("--config", type=Path, default=None, help="Document TOML")
    demos_parser.add_argument("--n", type=int, default=None, help="Nombre de démonstrations")
    demos_parser.add_argument("--seed", type=int, default=None, help="Graine")
    demos_parser.add_argument("--out", type=Path, required=True, help="Archive de sortie")

    learn_parser = subparsers.add_parser("learn", help="Apprendre une contrainte")
    learn = learn_parser.add_argument
    learn("demo_file", type=Path, help="Archive de démonstrations")
    learn("--config", type=Path, default=None, help="Document TOML")
    learn("--method", choices=["tcl", "icrl", "fc"], default=None)
    learn("--rd", choices=["exact", "approx"], default=None, help="Mode de décomposition")
    learn("--alpha", type=float, default=None, help="Poids de la pénalité de Bellman")
    learn("--out", type=Path, required=True, help="Archive du modèle")

    transfer_parser = subparsers.add_parser("transfer", help="Transférer une contrainte apprise")
    transfer = transfer_parser.add_argument
    transfer("model_file", type=Path, help="Archive du modèle")
    transfer("--config", type=Path, default=None, help="Document TOML (section env = cible)")
    transfer("--task-reward", default=None, help='Poids de tâche "feature=poids,..."')
    transfer("--seed", type=int, default=None, help="Graine de l'environnement cible")
    transfer("--out", type=Path, required=True, help="Archive de trajectoires")

    eval_parser = subparsers.add_parser("eval", help="Calculer les métriques de trajectoires")
    evaluate = eval_parser.add_argument
    evaluate("rollout_files", type=Path, nargs="+", help="Archives de trajectoires")
    evaluate("--config", type=Path, default=None, help="Document TOML (section eval)")
    evaluate("--out", type=Path, required=True, help="CSV de sortie")

    experiment_parser = subparsers.add_parser(
        "experiment", help="Exécuter une expérience complète"
    )
    experiment = experiment_parser.add_argument
    experiment("config", type=Path, help="Document TOML")
    experiment("--out-dir", type=Path, default=None, help="Répertoire du rapport")
    experiment(
        "--jobs", type=int, default=None,
        help="Nombre de processus (défaut: experiment.jobs, sinon settings.jobs)",
    )

    return parser


def run_command(args: argparse.Namespace):
    if args.command == "demos":
        cmd_demos(load_config(args.config), args.out, n=args.n, seed=args.seed)

    elif args.command == "learn":
        cmd_learn(args.demo_file, load_config(args.config), args.out,
                  method=args.method, rd_mode=args.rd, alpha=args.alpha)

    elif args.command == "transfer":
        cmd_transfer(args.model_file, load_config(args.config), args.out,
                     task_weights=parse_task_reward(args.task_reward), seed=args.seed)

    elif args.command == "eval":
        cmd_eval(args.rollout_files, args.out, load_config(args.config))

    elif args.command == "experiment":
        cmd_experiment(load_config(args.config), output_dir=args.out_dir, jobs=args.jobs)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Fonction principale avec CLI; retourne le code de sortie."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return 0

    configure_logging(args.log_level, args.log_file)
    try:
        require_valid_settings()
        run_command(args)
    except TclError as e:
        logger.error(f"Erreur ({type(e).__name__}): {e}")
        return e.exit_code

    return 0


if __name__ == "__main__":
    sys.exit(main())
