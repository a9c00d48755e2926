# dynamics package initialization
