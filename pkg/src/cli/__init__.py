"""Interface en ligne de commande: configuration, archives et commandes du pipeline."""
