"""
Sous-flux aléatoires nommés dérivés d'une graine unique.
"""

import zlib

import numpy as np


def _name_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def substream(seed: int, *names: str | int) -> np.random.Generator:
    """
    Construit un générateur indépendant pour un composant nommé.

    Deux appels avec la même graine et les mêmes noms produisent exactement
    le même flux, quel que soit l'ordre d'exécution des autres composants.

    Args:
        seed: Graine racine
        names: Chemin du composant (ex: "demos", "rollout", 3)

    Returns:
        Générateur numpy
    """
    keys = [int(seed)] + [n if isinstance(n, int) else _name_key(n) for n in names]
    return np.random.default_rng(np.random.SeedSequence(keys))


def derive_seed(seed: int, *names: str | int) -> int:
    """Dérive une graine entière (32 bits) pour un composant nommé."""
    return int(substream(seed, *names).integers(0, 2**31 - 1))
