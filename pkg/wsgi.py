"""
WSGI entry point for the JSON API.

Behind a reverse proxy the API can be mounted under a prefix sent in
X-Forwarded-Prefix (e.g. /orbitbook); ProxyFix moves it into SCRIPT_NAME.
"""
from werkzeug.middleware.proxy_fix import ProxyFix

from app import app

app.wsgi_app = ProxyFix(app.wsgi_app, x_for=1, x_proto=1, x_host=1, x_prefix=1)
application = app

if __name__ == "__main__":
    app.run()
