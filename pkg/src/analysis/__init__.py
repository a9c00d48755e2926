# analysis package initialization
