# Test services package