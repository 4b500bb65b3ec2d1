"""Dense state engine, graph states and measurement patterns."""
