import logging

from flask import Flask

from config import Config
from db.database import close_db, init_db
from blueprints.cli_bp import orbit_bp
from blueprints.report_bp import report_bp

app = Flask(__name__)
app.config.from_object(Config)

# Logging: services use module loggers, the Flask side uses app.logger
logging.basicConfig(level=getattr(logging, Config.LOG_LEVEL.upper(), logging.INFO),
                    format='%(asctime)s %(levelname)s %(name)s: %(message)s')
app.logger.setLevel(getattr(logging, Config.LOG_LEVEL.upper(), logging.INFO))

# Register database teardown handler
app.teardown_appcontext(close_db)

# Register blueprints
app.register_blueprint(orbit_bp)
app.register_blueprint(report_bp)

# Run history table
with app.app_context():
    try:
        init_db()
    except Exception as e:
        app.logger.error(f"Database initialization failed at startup: {e}")


if __name__ == "__main__":
    with app.app_context():
        init_db()
    app.run(debug=True)
