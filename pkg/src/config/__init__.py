# config package initialization
