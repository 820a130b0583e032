from flask import Flask, Response, request, jsonify
from flask.typing import ResponseReturnValue
from flask_cors import CORS
from datetime import datetime
from typing import Optional, Tuple
import logging

from sieve_config import configure_logging, get_cyclotomic_defaults, get_search_defaults, get_service_config
from modules.criteria import candidate_from_n, diagnose
from modules.errors import NotPrimeError, QrSieveError
from modules.search import SearchMode, coset_scan, exhaustive_search, parse_residue_list, verify_candidate_set

VERSION = '1.0.0'

# Configure logging
configure_logging()
logger = logging.getLogger(__name__)

service_config = get_service_config()

app = Flask(__name__)
CORS(app, resources={
    r"/api/*": {
        "origins": service_config['cors_origins'],
        "methods": ["GET", "POST", "OPTIONS"],
        "allow_headers": ["Content-Type"],
    }
})


def error_response(e: Exception, status: Optional[int] = None) -> Tuple[Response, int]:
    """JSON error body; library errors are client errors unless told otherwise"""
    if isinstance(e, QrSieveError):
        return jsonify({
            'success': False,
            'error': str(e),
            'code': e.code
        }), status or 400
    logger.error(f"Unexpected error: {e}")
    return jsonify({
        'success': False,
        'error': str(e),
        'code': 'INTERNAL'
    }), status or 500


def _int_arg(name: str) -> int:
    raw = request.args.get(name)
    if raw is None:
        raise ValueError(f"missing query parameter '{name}'")
    return int(raw)


@app.route('/api/health', methods=['GET'])
def health_check() -> Response:
    """Health check endpoint"""
    return jsonify({
        'status': 'healthy',
        'timestamp': datetime.now().isoformat(),
        'version': VERSION
    })


@app.route('/api/check/<int:n>', methods=['GET'])
def check_n(n: int) -> ResponseReturnValue:
    """Every criteria verdict for one n"""
    cyclotomic = get_cyclotomic_defaults()
    try:
        cand = candidate_from_n(n)
    except NotPrimeError as e:
        return jsonify({
            'success': False,
            'error': str(e),
            'code': e.code,
            'n': e.n,
            'p': e.p,
            'factorization': str(e.factorization)
        })
    except QrSieveError as e:
        return error_response(e)
    try:
        diagnosis = diagnose(cand, cyclotomic['bases'], cyclotomic['k_max'])
        return jsonify({
            'success': True,
            'diagnosis': diagnosis.to_dict()
        })
    except Exception as e:
        return error_response(e)


@app.route('/api/verify', methods=['POST'])
def verify_set() -> ResponseReturnValue:
    """Check {"p": P, "set": [...] or "a,b,c"}"""
    try:
        data = request.get_json(silent=True) or {}
        if 'p' not in data or 'set' not in data:
            return jsonify({
                'success': False,
                'error': "body needs 'p' and 'set'",
                'code': 'CONFIG'
            }), 400
        values = data['set']
        if isinstance(values, str):
            values = parse_residue_list(values)
        else:
            values = [int(v) for v in values]
        result = verify_candidate_set(int(data['p']), values, bound=get_search_defaults()['verify_bound'])
        return jsonify({
            'success': True,
            'result': result.to_dict()
        })
    except (QrSieveError, ValueError, TypeError) as e:
        return error_response(e, None if isinstance(e, QrSieveError) else 400)
    except Exception as e:
        return error_response(e)


@app.route('/api/search', methods=['GET'])
def search() -> ResponseReturnValue:
    """Exhaustive search at a small candidate prime"""
    try:
        p = _int_arg('p')
        defaults = get_search_defaults()
        mode = SearchMode(request.args.get('mode', defaults['mode']))
        solutions = exhaustive_search(p, mode, bound=defaults['bound'])
        return jsonify({
            'success': True,
            'p': p,
            'mode': mode.value,
            'solutions': [s.to_list() for s in solutions]
        })
    except (QrSieveError, ValueError) as e:
        return error_response(e, None if isinstance(e, QrSieveError) else 400)
    except Exception as e:
        return error_response(e)


@app.route('/api/coset-scan', methods=['GET'])
def coset_scan_route() -> ResponseReturnValue:
    """Cosets of the subgroups of order n and n-1"""
    try:
        p = _int_arg('p')
        report = coset_scan(p, bound=get_search_defaults()['bound'])
        return jsonify({
            'success': True,
            'report': report.to_dict()
        })
    except (QrSieveError, ValueError) as e:
        return error_response(e, None if isinstance(e, QrSieveError) else 400)
    except Exception as e:
        return error_response(e)


if __name__ == '__main__':
    logger.info(f"Starting residue sieve service on http://{service_config['host']}:{service_config['port']}")
    app.run(host=service_config['host'], port=service_config['port'])
