# Core package for configuration and utilities 