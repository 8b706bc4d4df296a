# Database package initialization