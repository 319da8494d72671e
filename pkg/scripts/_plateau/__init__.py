"""Simulation lab and bound calculators for non-elitist EAs on OneMax / Plateau_r."""
