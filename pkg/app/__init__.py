# MEMS quenching lab package
