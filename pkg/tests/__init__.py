# Tests for spinelab
