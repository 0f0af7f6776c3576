# Test package for mutsched
