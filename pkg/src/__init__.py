# src package initialization
