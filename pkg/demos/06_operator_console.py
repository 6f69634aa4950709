"""The operator loop, end to end, without a browser.

Serves an interactive mission on the telemetry bridge (ephemeral port,
headless pacing), connects a raw TCP client speaking the native
4-byte-length + JSON framing, and flies the flower-landing course by
hand: climb, sixteen 5-cm nudges forward, descend, thrust cut on
touchdown.  Every command waits for its ack -- the bridge enforces the
2 Hz command window and the 5-cm per-axis clamp, so this is exactly
what a human operator's keystrokes become.

The session is then persisted and re-run headlessly from the saved
file: the replay applies the same commands at the same ticks with the
same seed, so it reproduces the live trajectory bit for bit.
"""

import json
import socket
import struct
import tempfile

from flapsim import metrics
from flapsim.bridge import serve
from flapsim.config import load_config, preset
from flapsim.harness import run_experiment


class Client:
    def __init__(self, port):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=30)
        self.sock.settimeout(30)
        self.seq = 0

    def send(self, obj):
        body = json.dumps(obj).encode()
        self.sock.sendall(struct.pack(">I", len(body)) + body)

    def recv(self):
        def exact(n):
            buf = b""
            while len(buf) < n:
                buf += self.sock.recv(n - len(buf))
            return buf
        (n,) = struct.unpack(">I", exact(4))
        return json.loads(exact(n))

    def wait(self, pred):
        while True:
            msg = self.recv()
            if pred(msg):
                return msg

    def command(self, **fields):
        self.seq += 1
        self.send({"client_seq": self.seq, **fields})
        return self.wait(lambda m: m.get("type") == "ack"
                         and m.get("client_seq") == self.seq)


def main():
    cfg = preset("mission30s", seed=9)
    cfg.mission = {"kind": "interactive"}
    cfg.duration = 60.0
    server = serve(cfg, port=0, rtf=None)   # headless: no pacing
    print(f"bridge on 127.0.0.1:{server.port} (headless)")

    c = Client(server.port)
    hello = c.wait(lambda m: m["type"] == "hello")
    print(f"connected as {hello['role']}, "
          f"config {hello['config_hash'][:12]}...")

    c.send({"type": "start"})
    for dz in (0.05, 0.04):                    # climb to 9 cm
        c.command(type="increment", dz=dz)
    for _ in range(16):                        # march to the flower
        c.command(type="increment", dx=0.05)
    print("at the flower; descending")
    for _ in range(2):                         # 0.09 -> 0.04 -> 0.00
        c.command(type="increment", dz=-0.05)

    ev = c.wait(lambda m: m.get("type") == "event"
                and m["event"] in ("landed", "aborted"))
    print(f"event: {ev['event']} at t = {ev['t']:.2f} s")
    c.send({"type": "stop"})
    c.wait(lambda m: m.get("event") == "stopped")

    live = server.sim.log
    i = metrics._i
    final = live.rows[-1]
    err = metrics.touchdown_error_cm(live, 0.80, 0.0)
    print(f"live touchdown: x = {final[i('px')]:.4f} m, "
          f"err {err:.2f} cm from flower center, "
          f"{len(live)} ticks flown")

    path = tempfile.mktemp(prefix="flapsim-session-", suffix=".yaml")
    server.save_session(path)
    server.stop()
    print(f"session saved to {path}")

    replay, _ = run_experiment(load_config(path))
    rfinal = replay.rows[len(live) - 1]
    same = all(rfinal[k] == final[k] for k in range(len(final)))
    print(f"headless replay of the saved session: "
          f"x = {rfinal[i('px')]:.4f} m, bit-identical = {same}")


if __name__ == "__main__":
    main()
