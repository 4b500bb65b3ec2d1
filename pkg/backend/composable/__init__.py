"""Interactive systems, composition, exact execution and channel comparison."""
