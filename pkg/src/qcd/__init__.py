"""Channel discrimination toolkit: divergences, hypothesis testing and adaptive bounds."""
