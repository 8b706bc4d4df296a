# Blueprints package initialization