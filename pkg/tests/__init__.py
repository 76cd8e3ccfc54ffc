# Tests package for harnack-verify
