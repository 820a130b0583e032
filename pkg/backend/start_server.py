from app import app
from sieve_config import get_service_config, get_search_defaults
import logging

logger = logging.getLogger(__name__)

if __name__ == '__main__':
    config = get_service_config()
    logger.info(f"Search bound for /api/search and /api/coset-scan: p <= {get_search_defaults()['bound']}")
    logger.info(f"Starting residue sieve service on http://{config['host']}:{config['port']}")
    app.run(host=config['host'], port=config['port'], debug=False)
