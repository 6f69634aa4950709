"""Real-time boundary between the simulation loop and operator clients.

One listening port speaks two framings, auto-detected per connection:

  * native: 4-byte big-endian length prefix, then UTF-8 JSON
  * WebSocket: an HTTP Upgrade request (detected by its "GET " prefix)
    is answered with a standard 101 handshake; messages are unfragmented
    text frames.  This is enough for a browser client with zero
    dependencies server-side.

The first client to request control becomes the controller; everyone
else observes.  Operator commands are validated, deduplicated by
(client id, client sequence), stamped at tick granularity, and fed to
the mission layer through a bounded queue — the simulation thread is
the only consumer, so the 480 Hz loop never blocks on the network.
State frames go out decimated (default 30 Hz); slow observers lose
state frames rather than slowing the loop.  On controller disconnect
the mission simply keeps its last setpoint.

The applied command stream is persisted as a scripted mission config,
so a live flown session replays headlessly bit-for-bit (same seed).
"""

import base64
import copy
import hashlib
import json
import queue
import socket
import struct
import threading
import time

from .config import save_config
from .harness import Simulation, SimulationError
from .mission import HighLevelCommand

PROTOCOL_VERSION = 1
_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


# ---------------------------------------------------------------- #
# framing


class _TcpFraming:
    def __init__(self, sock):
        self.sock = sock

    def recv_msg(self):
        head = _recv_exact(self.sock, 4)
        if head is None:
            return None
        (n,) = struct.unpack(">I", head)
        if n > 1 << 20:
            raise ValueError("oversized frame")
        body = _recv_exact(self.sock, n)
        if body is None:
            return None
        return body.decode("utf-8")

    def send_msg(self, text):
        data = text.encode("utf-8")
        self.sock.sendall(struct.pack(">I", len(data)) + data)


class _WsFraming:
    """Server-side RFC 6455 subset: unfragmented text frames."""

    def __init__(self, sock):
        self.sock = sock

    def handshake(self):
        data = b""
        while b"\r\n\r\n" not in data:
            chunk = self.sock.recv(4096)
            if not chunk:
                return False
            data += chunk
            if len(data) > 1 << 16:
                return False
        key = None
        for line in data.split(b"\r\n"):
            if line.lower().startswith(b"sec-websocket-key:"):
                key = line.split(b":", 1)[1].strip().decode()
        if key is None:
            return False
        accept = base64.b64encode(
            hashlib.sha1((key + _WS_GUID).encode()).digest()).decode()
        self.sock.sendall(
            ("HTTP/1.1 101 Switching Protocols\r\n"
             "Upgrade: websocket\r\n"
             "Connection: Upgrade\r\n"
             f"Sec-WebSocket-Accept: {accept}\r\n\r\n").encode())
        return True

    def recv_msg(self):
        while True:
            head = _recv_exact(self.sock, 2)
            if head is None:
                return None
            b1, b2 = head
            opcode = b1 & 0x0F
            masked = b2 & 0x80
            ln = b2 & 0x7F
            if ln == 126:
                ext = _recv_exact(self.sock, 2)
                if ext is None:
                    return None
                (ln,) = struct.unpack(">H", ext)
            elif ln == 127:
                ext = _recv_exact(self.sock, 8)
                if ext is None:
                    return None
                (ln,) = struct.unpack(">Q", ext)
            mask = _recv_exact(self.sock, 4) if masked else b"\x00" * 4
            if mask is None:
                return None
            payload = _recv_exact(self.sock, ln) if ln else b""
            if payload is None:
                return None
            if masked:
                payload = bytes(c ^ mask[i % 4]
                                for i, c in enumerate(payload))
            if opcode == 0x8:            # close
                return None
            if opcode == 0x9:            # ping -> pong
                self._send_frame(0xA, payload)
                continue
            if opcode in (0x1, 0x2):
                return payload.decode("utf-8")
            # continuation/pong: ignore

    def _send_frame(self, opcode, payload):
        header = bytes([0x80 | opcode])
        n = len(payload)
        if n < 126:
            header += bytes([n])
        elif n < 1 << 16:
            header += bytes([126]) + struct.pack(">H", n)
        else:
            header += bytes([127]) + struct.pack(">Q", n)
        self.sock.sendall(header + payload)

    def send_msg(self, text):
        self._send_frame(0x1, text.encode("utf-8"))


def _recv_exact(sock, n):
    buf = b""
    while len(buf) < n:
        try:
            chunk = sock.recv(n - len(buf))
        except OSError:
            return None
        if not chunk:
            return None
        buf += chunk
    return buf


# ---------------------------------------------------------------- #
# clients


class _Client:
    _ids = 0

    def __init__(self, framing, role):
        _Client._ids += 1
        self.id = _Client._ids
        self.framing = framing
        self.role = role
        self.sendq = queue.Queue(maxsize=256)
        self.alive = True
        self.seen = set()        # client_seq dedup
        self.client_id = None

    def enqueue(self, msg: dict):
        """Queue a message; drops state frames under backpressure."""
        try:
            self.sendq.put_nowait(msg)
        except queue.Full:
            if msg.get("type") != "state":
                self.alive = False   # can't even keep up with acks


class BridgeServer:
    """Owns the socket, the client set, and the paced simulation loop."""

    def __init__(self, sim: Simulation, host="127.0.0.1", port=8750,
                 rtf=1.0, decimation_hz=30.0, autostart=False):
        if rtf is not None and rtf <= 0.0:
            raise ValueError("real-time factor must be positive")
        self.sim = sim
        self._cfg0 = copy.deepcopy(sim.cfg)
        self.host = host
        self.port = port
        self.rtf = rtf
        self.decim = max(1, int(round(sim.rate / decimation_hz)))
        self._clients = []
        self._lock = threading.Lock()
        self._controller = None
        self._cmd_queue = queue.Queue(maxsize=64)
        self._running = threading.Event()
        if autostart:
            self._running.set()
        self._shutdown = threading.Event()
        self._seq = 0
        self._incr_fifo = []
        self._other_fifo = []
        self._applied_seen = 0
        self._threads = []
        self._sock = None

    # -- lifecycle ----------------------------------------------------

    def start(self):
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((self.host, self.port))
        self.port = self._sock.getsockname()[1]
        self._sock.listen(8)
        self._sock.settimeout(0.2)
        t = threading.Thread(target=self._accept_loop, daemon=True)
        t.start()
        self._threads.append(t)
        t = threading.Thread(target=self._sim_loop, daemon=True)
        t.start()
        self._threads.append(t)
        return self.port

    def stop(self):
        self._shutdown.set()
        self._running.set()     # unblock the sim loop so it can exit
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
        with self._lock:
            clients = list(self._clients)
        for c in clients:
            c.alive = False
            try:
                c.framing.sock.close()
            except OSError:
                pass
        for t in self._threads:
            t.join(timeout=2.0)

    def save_session(self, path):
        """Persist the flown command stream as a replayable config."""
        cfg = copy.deepcopy(self._cfg0)
        entries = []
        for rec in getattr(self.sim.mission, "applied", ()):
            e = {"t": rec["t"], "kind": rec["kind"]}
            if rec["kind"] == "increment":
                e.update(dx=rec["dx"], dy=rec["dy"],
                         dz=rec["dz"], dyaw=rec["dyaw"])
            elif rec["kind"] == "mode":
                e["mode"] = rec["mode"]
            entries.append(e)
        cfg.mission = {"kind": "script", "entries": entries,
                       "mode": cfg.mission.get("mode", "terrain-relative")}
        cfg.duration = max(self.sim.k / self.sim.rate, 1.0)
        cfg.name = f"{cfg.name}-session"
        save_config(cfg, path)
        return path

    # -- network side ---------------------------------------------------

    def _accept_loop(self):
        while not self._shutdown.is_set():
            try:
                conn, _ = self._sock.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            conn.settimeout(None)
            threading.Thread(target=self._client_session,
                             args=(conn,), daemon=True).start()

    def _client_session(self, conn):
        # Sniff the framing from the first bytes: WebSocket clients open
        # with an HTTP GET immediately, while plain TCP clients may wait
        # silently for the hello banner — so the peek must not block.
        conn.settimeout(0.3)
        try:
            head = conn.recv(4, socket.MSG_PEEK)
        except socket.timeout:
            head = b""
        except OSError:
            return
        conn.settimeout(None)
        if head[:3] == b"GET" or (head and b"GET".startswith(head)):
            framing = _WsFraming(conn)
            if not framing.handshake():
                conn.close()
                return
        else:
            framing = _TcpFraming(conn)

        with self._lock:
            role = "observer" if self._controller else "controller"
            client = _Client(framing, role)
            self._clients.append(client)
            if role == "controller":
                self._controller = client

        client.enqueue({
            "type": "hello",
            "protocol": PROTOCOL_VERSION,
            "role": role,
            "config_hash": self.sim.log.meta["config_hash"],
            "decimation_hz": self.sim.rate / self.decim,
            "tick_rate_hz": self.sim.rate,
            "preset": self.sim.cfg.name,
        })

        writer = threading.Thread(target=self._writer_loop,
                                  args=(client,), daemon=True)
        writer.start()
        try:
            while client.alive and not self._shutdown.is_set():
                text = framing.recv_msg()
                if text is None:
                    break
                self._handle_message(client, text)
        finally:
            self._drop_client(client)

    def _writer_loop(self, client):
        while client.alive and not self._shutdown.is_set():
            try:
                msg = client.sendq.get(timeout=0.2)
            except queue.Empty:
                continue
            try:
                client.framing.send_msg(json.dumps(msg))
            except OSError:
                client.alive = False
        # no explicit close here; the reader side owns teardown

    def _drop_client(self, client):
        client.alive = False
        with self._lock:
            if client in self._clients:
                self._clients.remove(client)
            if self._controller is client:
                # vehicle holds its last setpoint; a later client
                # may claim control
                self._controller = None
        try:
            client.framing.sock.close()
        except OSError:
            pass

    def _handle_message(self, client, text):
        try:
            msg = json.loads(text)
            if not isinstance(msg, dict):
                raise ValueError("not an object")
            mtype = msg["type"]
        except (ValueError, KeyError) as e:
            client.enqueue({"type": "error", "error": f"malformed: {e}"})
            return

        if mtype == "ping":
            client.enqueue({"type": "pong", "t": msg.get("t")})
            return

        if client.role != "controller":
            client.enqueue({"type": "error",
                            "error": "observer role: commands rejected"})
            return

        if mtype in ("start", "stop", "reset"):
            self._handle_control(client, mtype)
            return

        if mtype in ("increment", "mode"):
            cseq = msg.get("client_seq")
            if cseq is not None:
                if cseq in client.seen:
                    return           # duplicate delivery: ignore
                client.seen.add(cseq)
            try:
                cmd = self._parse_command(msg)
            except (TypeError, ValueError, KeyError) as e:
                client.enqueue({"type": "error",
                                "error": f"bad command: {e}",
                                "client_seq": cseq})
                return
            try:
                self._cmd_queue.put_nowait((client, cseq, cmd))
            except queue.Full:
                client.enqueue({"type": "ack", "client_seq": cseq,
                                "applied": False, "reason": "queue-full"})
            return

        client.enqueue({"type": "error",
                        "error": f"unknown message type {mtype!r}"})

    @staticmethod
    def _parse_command(msg):
        if msg["type"] == "mode":
            mode = msg["mode"]
            if mode not in ("terrain-relative", "absolute-altitude"):
                raise ValueError(f"unknown altitude mode {mode!r}")
            return HighLevelCommand(0.0, kind="mode", mode=mode,
                                    source="operator")
        return HighLevelCommand(
            0.0,
            dx=float(msg.get("dx", 0.0)), dy=float(msg.get("dy", 0.0)),
            dz=float(msg.get("dz", 0.0)), dyaw=float(msg.get("dyaw", 0.0)),
            kind="increment", source="operator")

    def _handle_control(self, client, mtype):
        if mtype == "start":
            self._running.set()
            self._broadcast_event("started")
        elif mtype == "stop":
            self._running.clear()
            self._broadcast_event("stopped")
        else:  # reset: fresh simulation from the original config
            self._running.clear()
            self.sim = Simulation(copy.deepcopy(self._cfg0))
            self._incr_fifo.clear()
            self._other_fifo.clear()
            self._applied_seen = 0
            while not self._cmd_queue.empty():
                try:
                    self._cmd_queue.get_nowait()
                except queue.Empty:
                    break
            self._broadcast_event("reset")

    # -- simulation side --------------------------------------------------

    def _sim_loop(self):
        wall0 = time.perf_counter()
        k0 = self.sim.k
        was_landed = self.sim.truth.landed
        while not self._shutdown.is_set():
            if not self._running.is_set():
                self._running.wait(timeout=0.1)
                wall0 = time.perf_counter()
                k0 = self.sim.k
                continue
            if self.rtf is not None:
                target = wall0 + (self.sim.k - k0) / (self.sim.rate
                                                      * self.rtf)
                delay = target - time.perf_counter()
                if delay > 0:
                    time.sleep(delay)

            self._inject_commands()
            st = self.sim.truth
            k = self.sim.k
            try:
                est, sp, cmd = self.sim.step()
            except SimulationError as e:
                self._broadcast_event(f"aborted: {e}")
                self._running.clear()
                continue
            self._flush_acks()
            if cmd.fault:
                self._broadcast_event("controller-fault")
            if st.landed != was_landed:
                self._broadcast_event(
                    "landed" if st.landed else "airborne")
                was_landed = st.landed
            if k % self.decim == 0:
                self._broadcast_state(k / self.sim.rate, st, est, sp, cmd)

    def _inject_commands(self):
        t = self.sim.k / self.sim.rate
        interactive = getattr(self.sim.mission, "interactive", False)
        while True:
            try:
                client, cseq, cmd = self._cmd_queue.get_nowait()
            except queue.Empty:
                return
            if not interactive:
                client.enqueue({"type": "ack", "client_seq": cseq,
                                "applied": False,
                                "reason": "mission-not-interactive"})
                continue
            stamped = HighLevelCommand(
                t, dx=cmd.dx, dy=cmd.dy, dz=cmd.dz, dyaw=cmd.dyaw,
                kind=cmd.kind, mode=cmd.mode, source=cmd.source)
            ok = self.sim.mission.submit(stamped)
            if not ok:
                client.enqueue({"type": "ack", "client_seq": cseq,
                                "applied": False,
                                "reason": "mission-queue-full"})
                continue
            if cmd.kind == "increment":
                self._incr_fifo.append((client, cseq))
            else:
                self._other_fifo.append((client, cseq))

    def _flush_acks(self):
        applied = getattr(self.sim.mission, "applied", None)
        if applied is None:
            # non-interactive mission: nothing ever applies
            for client, cseq in self._incr_fifo + self._other_fifo:
                client.enqueue({"type": "ack", "client_seq": cseq,
                                "applied": False,
                                "reason": "mission-not-interactive"})
            self._incr_fifo.clear()
            self._other_fifo.clear()
            return
        while self._applied_seen < len(applied):
            rec = applied[self._applied_seen]
            self._applied_seen += 1
            if rec.get("source") != "operator":
                continue
            if rec["kind"] == "increment":
                n = max(1, int(rec.get("coalesced", 1)))
                batch, self._incr_fifo = (self._incr_fifo[:n],
                                          self._incr_fifo[n:])
                for client, cseq in batch:
                    client.enqueue({
                        "type": "ack", "client_seq": cseq,
                        "applied": True, "t": rec["t"],
                        "clamped": bool(rec.get("clamped")),
                        "coalesced": n > 1})
            else:
                if self._other_fifo:
                    client, cseq = self._other_fifo.pop(0)
                    client.enqueue({"type": "ack", "client_seq": cseq,
                                    "applied": True, "t": rec["t"],
                                    "clamped": False, "coalesced": False})

    # -- outbound ---------------------------------------------------------

    def _next_seq(self):
        self._seq += 1
        return self._seq

    def _broadcast(self, msg):
        with self._lock:
            clients = list(self._clients)
        for c in clients:
            c.enqueue(msg)

    def _broadcast_event(self, event):
        self._broadcast({"type": "event", "seq": self._next_seq(),
                         "t": self.sim.k / self.sim.rate, "event": event})

    def _broadcast_state(self, t, st, est, sp, cmd):
        self._broadcast({
            "type": "state", "seq": self._next_seq(), "t": t,
            "truth": {"p": [st.px, st.py, st.pz],
                      "v": [st.vx, st.vy, st.vz],
                      "q": [st.qw, st.qx, st.qy, st.qz],
                      "landed": bool(st.landed)},
            "est": {"x": float(est.x), "y": float(est.y),
                    "z": float(est.z), "vx": float(est.vx),
                    "vy": float(est.vy), "vz": float(est.vz),
                    "q": [float(v) for v in est.q]},
            "sp": {"x": sp.x, "y": sp.y, "z": sp.z, "yaw": sp.yaw,
                   "mode": sp.mode, "cut": bool(sp.cut_thrust)},
            "h_terr": self.sim.terrain.height(st.px, st.py),
            "thrust": float(cmd.thrust),
            "fault": bool(cmd.fault),
        })


def serve(cfg, host="127.0.0.1", port=8750, rtf=1.0,
          decimation_hz=30.0, autostart=False):
    """Build a simulation and serve it; returns the running server."""
    server = BridgeServer(Simulation(cfg), host=host, port=port,
                          rtf=rtf, decimation_hz=decimation_hz,
                          autostart=autostart)
    server.start()
    return server
