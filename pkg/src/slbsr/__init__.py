"""Bernays-Schönfinkel-Ramsey separation logic: decision procedure and tooling."""
