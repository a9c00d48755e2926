# topology package initialization
