"""Dense linear algebra over a selectable scalar precision."""
