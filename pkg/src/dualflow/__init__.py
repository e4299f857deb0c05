"""dualflow: GNN surrogate for edge-level traffic changes under
capacity-reduction policies, with a built-in equilibrium assignment oracle."""

__version__ = "0.1.0"
