# experiments package initialization
