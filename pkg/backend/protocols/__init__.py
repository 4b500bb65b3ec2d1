"""Party machines of the delegated-computation protocols and their simulators."""
