import threading

import pytest

from sokopoints.service import ServiceConfig, make_server


@pytest.fixture
def service_url():
    server = make_server("127.0.0.1", 0, ServiceConfig())
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    yield f"http://{host}:{port}"
    server.shutdown()
    server.server_close()
