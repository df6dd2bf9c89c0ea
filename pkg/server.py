"""
irrsum Flask Server
Series evaluation, package decompositions and region sampling over HTTP
"""

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from flask import Flask, request, jsonify
from flask_cors import CORS
from typing import Any, Dict, Optional
import traceback
import logging

import mpmath

from config import get_settings, reload_settings
from core import __version__
from core.domains import LogDomain, QuadDomain, boundary_rows
from core.errors import IrrsumError, InvalidParameter
from core.numerics import workprec_bits
from core.series import series_from_dict
from core.summation import summate_by_packages
from cli import sum_payload

logger = logging.getLogger(__name__)


def _w_text(value: Any) -> str:
    """Accept [re, im], "re,im" or a number"""
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise InvalidParameter(f"w as a list must be [re, im], got {value!r}")
        return f"{value[0]},{value[1]}"
    if isinstance(value, bool) or value is None:
        raise InvalidParameter("missing or invalid w")
    return str(value)


class IrrsumServer:
    """Flask server exposing the irrsum operations"""

    def __init__(self, verbose: bool = False):
        self.app = Flask(__name__)
        CORS(self.app)  # Enable CORS for all routes
        self.verbose = verbose

        if not verbose:
            logging.getLogger('werkzeug').setLevel(logging.WARNING)

        self._setup_routes()

    def _bits(self, data: Dict[str, Any]) -> int:
        bits = data.get('prec') or get_settings().precision.bits
        try:
            bits = int(bits)
        except (TypeError, ValueError):
            raise InvalidParameter(f"prec must be an integer, got {bits!r}")
        if bits < 53:
            raise InvalidParameter(f"precision must be at least 53 bits, got {bits}")
        return bits

    def _error(self, e: Exception):
        if isinstance(e, IrrsumError):
            return jsonify({"success": False, "error": f"Validation error: {str(e)}"}), 400
        error_msg = str(e)
        if self.verbose:
            error_msg += f"\n{traceback.format_exc()}"
        logger.error("request failed: %s", e)
        return jsonify({"success": False, "error": error_msg}), 500

    def _body(self) -> Dict[str, Any]:
        data = request.get_json(silent=True)
        if not isinstance(data, dict):
            raise InvalidParameter("request body must be a JSON object")
        return data

    def _setup_routes(self):
        """Setup Flask routes"""

        @self.app.route('/api/status', methods=['GET'])
        def status():
            """Server health check"""
            return jsonify({
                "status": "running",
                "precision_bits": get_settings().precision.bits,
                "version": __version__,
                "verbose": self.verbose
            })

        @self.app.route('/api/sum', methods=['POST'])
        def sum_series():
            """Evaluate a series description at one point"""
            try:
                data = self._body()
                if 'series' not in data or 'w' not in data:
                    return jsonify({
                        "success": False,
                        "error": "Missing required fields: series and w"
                    }), 400
                payload = sum_payload(
                    lambda: series_from_dict(data['series']),
                    data.get('method', 'dipp'),
                    _w_text(data['w']),
                    k=data.get('k'),
                    a=data.get('a'),
                    tol=data.get('tol'),
                    n_max=data.get('n_max'),
                    bits=self._bits(data),
                    adaptive=bool(data.get('adaptive', False)))
                payload["success"] = True
                return jsonify(payload)
            except Exception as e:
                return self._error(e)

        @self.app.route('/api/packages', methods=['POST'])
        def packages():
            """Package decomposition of a series description"""
            try:
                data = self._body()
                if 'series' not in data:
                    return jsonify({"success": False, "error": "Missing required field: series"}), 400
                settings = get_settings()
                bits = self._bits(data)
                with workprec_bits(bits):
                    series = series_from_dict(data['series'])
                    dec = summate_by_packages(
                        series,
                        a=data.get('a', settings.summation.a),
                        k=data.get('k', settings.summation.k),
                        eps_degen=data.get('eps'),
                        n_max=data.get('n_max', settings.summation.n_max),
                        density_window=settings.summation.density_window,
                        eps_cap_exponent=settings.summation.eps_cap_exponent)
                    payload = dec.to_dict(bits, settings.output.extra_digits)
                    payload["series"] = series.describe()
                payload["precision_bits"] = bits
                payload["success"] = True
                return jsonify(payload)
            except Exception as e:
                return self._error(e)

        @self.app.route('/api/region', methods=['POST'])
        def region():
            """Boundary samples of H_{a,k} or Omega_C"""
            try:
                data = self._body()
                kind = data.get('domain', 'log')
                with workprec_bits(self._bits(data)):
                    if kind == 'log':
                        domain = LogDomain(data.get('a', 0), data.get('k', 1))
                    elif kind == 'quad':
                        domain = QuadDomain(data.get('C', 1), data.get('a', 0))
                    else:
                        return jsonify({
                            "success": False,
                            "error": f"Invalid domain: {kind}. Must be 'log' or 'quad'"
                        }), 400
                    rows = boundary_rows(domain, (data.get('ymin', -10), data.get('ymax', 10)),
                                         int(data.get('count', 101)))
                    samples = [[float(y), float(x)] for y, x in rows]
                return jsonify({"success": True, "samples": samples})
            except Exception as e:
                return self._error(e)

        @self.app.route('/api/config', methods=['POST'])
        def update_config():
            """Reload configuration"""
            try:
                data = request.get_json(silent=True)
                config_path = data.get('config_path') if data else None

                if config_path:
                    reload_settings(config_path)

                return jsonify({
                    "success": True,
                    "message": "Configuration reloaded",
                    "precision_bits": get_settings().precision.bits
                })

            except Exception as e:
                return self._error(e)

    def run(self, host='0.0.0.0', port=5000, debug=False):
        """Run the Flask server"""
        print(f"Starting irrsum server on http://{host}:{port}")
        print(f"Sum endpoint: POST http://{host}:{port}/api/sum")
        print(f"Status endpoint: GET http://{host}:{port}/api/status")

        self.app.run(host=host, port=port, debug=debug)


def main(argv: Optional[list] = None):
    """Main server entry point"""
    import argparse

    settings = get_settings()
    parser = argparse.ArgumentParser(description="irrsum Flask Server")
    parser.add_argument("--host", default=settings.server.host, help="Host to bind to")
    parser.add_argument("--port", type=int, default=settings.server.port, help="Port to bind to")
    parser.add_argument("--verbose", "-v", action="store_true", help="Enable verbose output")
    parser.add_argument("--debug", action="store_true", help="Enable Flask debug mode")
    parser.add_argument("--config", "-c", type=str, help="Path to configuration file")

    args = parser.parse_args(argv)

    # Load configuration if specified
    if args.config:
        try:
            reload_settings(args.config)
            print(f"Loaded configuration from {args.config}")
        except IrrsumError as e:
            print(f"Error loading config: {e}")
            return 1

    # Support environment variable for verbose mode (useful for Docker)
    verbose = (args.verbose or get_settings().server.verbose
               or os.getenv('VERBOSE', '').lower() in ('true', '1', 'yes'))
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    mpmath.mp.prec = get_settings().precision.bits

    try:
        server = IrrsumServer(verbose=verbose)
        server.run(host=args.host, port=args.port, debug=args.debug)
    except Exception as e:
        print(f"Server failed to start: {e}")
        return 1

    return 0


if __name__ == "__main__":
    sys.exit(main())
