"""CLI, case-study simulations, scenarios and the PingPong benchmark."""
