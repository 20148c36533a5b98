"""Fixed-step 6-DoF vehicle simulation on the environment.

Model summary:
  - rigid chassis, semi-implicit Euler at dt <= 20 ms (default 5 ms);
  - per-wheel vertical raycast suspension (spring-damper along the chassis up
    axis, bump stop beyond travel);
  - tire forces in the terrain tangent plane: drive force with linear fade
    toward max_speed, braking and lateral grip as velocity-killing stiction
    clamped to the Coulomb circle mu*N. Zero throttle engages the parking
    stiction, so an idle vehicle holds on any slope below atan(mu);
  - deformable (SCM) contact: massless-wheel equilibrium between the
    suspension spring and the Bekker pressure-sinkage law, with per-cell
    plastic sinkage and a hardening stiffness multiplier;
  - obstacles are vertical cylinders hit by 5 penalty spheres (4 wheels +
    chassis).

Everything is scalar float math on purpose: a step must stay in the tens of
microseconds for the benchmark to run faster than real time on one core.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from .errors import SimulationFault
from .semantics import ScmParams
from .terrain import CELLS_PER_AXIS, EnvironmentSpec
from .vehicles import VehicleParams

GRAVITY = 9.81
MAX_DT = 0.02
BUMP_STOP_FACTOR = 10.0        # bump-stop stiffness multiplier beyond travel
MIN_UP_Z = 0.15                # below this chassis-up z, wheels cannot bear load
PARKING_THROTTLE = 1e-3        # throttle below this engages parking stiction
ROLLOVER_THRESHOLD = math.radians(60.0)
STUCK_WINDOW = 8.0             # seconds
STUCK_EPSILON = 0.5            # meters at full scale


@dataclass(frozen=True)
class Action:
    """Normalized control command; out-of-range values are clamped, never rejected."""
    steering: float = 0.0   # [-1, 1], positive steers left
    throttle: float = 0.0   # [0, 1]
    braking: float = 0.0    # [0, 1]

    def __post_init__(self):
        object.__setattr__(self, "steering", min(max(self.steering, -1.0), 1.0))
        object.__setattr__(self, "throttle", min(max(self.throttle, 0.0), 1.0))
        object.__setattr__(self, "braking", min(max(self.braking, 0.0), 1.0))


@dataclass(frozen=True)
class VehicleState:
    position: Tuple[float, float, float]
    orientation: Tuple[float, float, float, float]   # (w, x, y, z), unit
    linear_velocity: Tuple[float, float, float]      # world frame
    angular_velocity: Tuple[float, float, float]     # body frame
    wheel_compression: Tuple[float, float, float, float]
    wheel_contact: Tuple[Optional[str], Optional[str], Optional[str], Optional[str]]
    sim_time: float = 0.0


@dataclass
class SoilState:
    """Sparse per-cell plastic sinkage and hardening multiplier (node-indexed)."""
    sinkage: Dict[int, float] = field(default_factory=dict)
    hardening: Dict[int, float] = field(default_factory=dict)


def quat_to_euler(q: Tuple[float, float, float, float]) -> Tuple[float, float, float]:
    """(roll, pitch, yaw) in radians, ZYX convention."""
    w, x, y, z = q
    roll = math.atan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y))
    sinp = 2.0 * (w * y - z * x)
    sinp = min(max(sinp, -1.0), 1.0)
    pitch = math.asin(sinp)
    yaw = math.atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))
    return roll, pitch, yaw


def yaw_quaternion(yaw: float) -> Tuple[float, float, float, float]:
    return (math.cos(yaw / 2.0), 0.0, 0.0, math.sin(yaw / 2.0))


def scm_pressure(sinkage: float, params: ScmParams, contact_width: float) -> float:
    """Bekker pressure-sinkage law p = (k_c/b + k_phi) * z^n, zero at z <= 0."""
    if sinkage <= 0.0:
        return 0.0
    return (params.k_c / contact_width + params.k_phi) * sinkage ** params.n_exp


def detect_rollover(state: VehicleState, threshold: float = ROLLOVER_THRESHOLD) -> bool:
    roll, pitch, _ = quat_to_euler(state.orientation)
    return abs(roll) > threshold or abs(pitch) > threshold


def detect_stuck(history, window: float = STUCK_WINDOW, epsilon: float = STUCK_EPSILON) -> bool:
    """True iff planar displacement over the trailing `window` seconds is below
    `epsilon`. `history` is a time-ordered sequence of (t, x, y)."""
    if not history:
        return False
    t_last, x_last, y_last = history[-1]
    horizon = t_last - window
    if history[0][0] > horizon:
        return False   # window not yet covered
    ref = None
    for t, x, y in history:
        if t >= horizon:
            ref = (x, y)
            break
    if ref is None:
        return False
    return math.hypot(x_last - ref[0], y_last - ref[1]) < epsilon


class Simulator:
    """Owns the immutable environment/vehicle tables; one instance per episode."""

    # wheel order: FL, FR, RL, RR (x forward, y left)
    def __init__(self, env: EnvironmentSpec, params: VehicleParams):
        self.env = env
        self.params = params
        self._n = CELLS_PER_AXIS
        self._res = env.resolution
        self._extent = env.extent
        self._elev = env.elevation_flat
        self._friction = env.node_friction_flat
        self._scm = env.node_scm_flat
        patches = env.semantics.patches
        self._class_names = [patches[i].terrain_class
                             for i in env.node_patch_index.ravel()]

        # precomputed base-terrain gradients at nodes (soil sinkage ignored
        # for normals: ruts are local and shallow relative to slopes)
        import numpy as np
        grid = env.heightfield.elevations
        gy, gx = np.gradient(grid, env.resolution)
        self._grad_x = gx.ravel().tolist()
        self._grad_y = gy.ravel().tolist()

        hw = params.wheelbase / 2.0
        ht = params.track_width / 2.0
        self._wheel_offsets = ((hw, ht), (hw, -ht), (-hw, ht), (-hw, -ht))
        self._droop_z = -(params.com_height + params.suspension_travel / 2.0)

        # spatial hash of obstacles for cheap per-step candidate lookup
        cell = max(4.0 * params.chassis_radius, 8.0 * env.scale.factor)
        self._obs_cell = cell
        buckets: Dict[Tuple[int, int], list] = {}
        reach = params.chassis_radius + max(params.wheelbase, params.track_width)
        for ob in env.obstacles.obstacles:
            pad = ob.footprint_radius + reach + cell
            for bx in range(int((ob.x - pad) / cell), int((ob.x + pad) / cell) + 1):
                for by in range(int((ob.y - pad) / cell), int((ob.y + pad) / cell) + 1):
                    buckets.setdefault((bx, by), []).append(ob)
        self._obs_buckets = buckets
        self._obs_damping = 0.02 * params.obstacle_stiffness

    # ---- terrain helpers (clamped; no exceptions in the hot path) ----

    def _surface(self, x: float, y: float, sink: Optional[Dict[int, float]]) -> float:
        res = self._res
        n = self._n
        gx = x / res
        gy = y / res
        if gx < 0.0:
            gx = 0.0
        elif gx > n - 1:
            gx = float(n - 1)
        if gy < 0.0:
            gy = 0.0
        elif gy > n - 1:
            gy = float(n - 1)
        ix = int(gx)
        if ix > n - 2:
            ix = n - 2
        iy = int(gy)
        if iy > n - 2:
            iy = n - 2
        fx = gx - ix
        fy = gy - iy
        base = iy * n + ix
        elev = self._elev
        h00 = elev[base]
        h01 = elev[base + 1]
        h10 = elev[base + n]
        h11 = elev[base + n + 1]
        if sink:
            h00 -= sink.get(base, 0.0)
            h01 -= sink.get(base + 1, 0.0)
            h10 -= sink.get(base + n, 0.0)
            h11 -= sink.get(base + n + 1, 0.0)
        return (h00 * (1.0 - fx) + h01 * fx) * (1.0 - fy) + \
               (h10 * (1.0 - fx) + h11 * fx) * fy

    def _node_index(self, x: float, y: float) -> int:
        n = self._n
        ix = int(x / self._res + 0.5)
        if ix < 0:
            ix = 0
        elif ix > n - 1:
            ix = n - 1
        iy = int(y / self._res + 0.5)
        if iy < 0:
            iy = 0
        elif iy > n - 1:
            iy = n - 1
        return iy * n + ix

    def _normal(self, x: float, y: float) -> Tuple[float, float, float]:
        res = self._res
        n = self._n
        gx = x / res
        gy = y / res
        if gx < 0.0:
            gx = 0.0
        elif gx > n - 1:
            gx = float(n - 1)
        if gy < 0.0:
            gy = 0.0
        elif gy > n - 1:
            gy = float(n - 1)
        ix = int(gx)
        if ix > n - 2:
            ix = n - 2
        iy = int(gy)
        if iy > n - 2:
            iy = n - 2
        fx = gx - ix
        fy = gy - iy
        base = iy * n + ix
        gxs = self._grad_x
        gys = self._grad_y
        dzdx = (gxs[base] * (1.0 - fx) + gxs[base + 1] * fx) * (1.0 - fy) + \
               (gxs[base + n] * (1.0 - fx) + gxs[base + n + 1] * fx) * fy
        dzdy = (gys[base] * (1.0 - fx) + gys[base + 1] * fx) * (1.0 - fy) + \
               (gys[base + n] * (1.0 - fx) + gys[base + n + 1] * fx) * fy
        inv = 1.0 / math.sqrt(dzdx * dzdx + dzdy * dzdy + 1.0)
        return (-dzdx * inv, -dzdy * inv, inv)

    # ---- spawn ----

    def spawn_state(self, x: float, y: float, yaw: float,
                    drop: float = 0.05) -> VehicleState:
        """Vehicle hanging at full droop just above the terrain under its wheels."""
        q = yaw_quaternion(yaw)
        cy = math.cos(yaw)
        sy = math.sin(yaw)
        h_max = -math.inf
        for ox, oy in self._wheel_offsets:
            wx = x + ox * cy - oy * sy
            wy = y + ox * sy + oy * cy
            h_max = max(h_max, self._surface(wx, wy, None))
        p = self.params
        z = h_max + p.wheel_radius - self._droop_z + drop * self.env.scale.factor
        return VehicleState(position=(x, y, z), orientation=q,
                            linear_velocity=(0.0, 0.0, 0.0),
                            angular_velocity=(0.0, 0.0, 0.0),
                            wheel_compression=(0.0, 0.0, 0.0, 0.0),
                            wheel_contact=(None, None, None, None),
                            sim_time=0.0)

    # ---- soil contact ----

    def _soil_normal_force(self, scm: ScmParams, depth: float, mult: float) -> float:
        """Bekker normal force at total sinkage `depth` (hardening included)."""
        if depth <= 0.0:
            return 0.0
        p = self.params
        r = p.wheel_radius
        z = depth if depth < 2.0 * r else 2.0 * r
        chord = 2.0 * math.sqrt(z * (2.0 * r - z)) if z < 2.0 * r else 0.0
        area = p.wheel_width * chord
        pressure = mult * (scm.k_c / p.wheel_width + scm.k_phi) * z ** scm.n_exp
        return pressure * area

    def _solve_soil_compression(self, scm: ScmParams, depth0: float, u_z: float,
                                mult: float) -> Tuple[float, float]:
        """Massless-wheel equilibrium: suspension spring force k*c equals the
        Bekker force at depth(c) = depth0 - c*u_z. Returns (c, normal force)."""
        p = self.params
        k = p.suspension_stiffness
        travel = p.suspension_travel
        f_hi = k * travel - self._soil_normal_force(scm, depth0 - travel * u_z, mult)
        if f_hi < 0.0:
            # suspension bottoms out; chassis carries the full soil reaction
            return travel, self._soil_normal_force(scm, depth0 - travel * u_z, mult)
        lo = 0.0
        hi = travel
        for _ in range(28):
            mid = 0.5 * (lo + hi)
            if k * mid - self._soil_normal_force(scm, depth0 - mid * u_z, mult) < 0.0:
                lo = mid
            else:
                hi = mid
        c = 0.5 * (lo + hi)
        return c, k * c

    # ---- main step ----

    def step(self, state: VehicleState, soil: SoilState, action: Action,
             dt: float) -> Tuple[VehicleState, SoilState]:
        if not 0.0 < dt <= MAX_DT:
            raise ValueError(f"dt must be in (0, {MAX_DT}], got {dt}")
        p = self.params
        px, py, pz = state.position
        qw, qx, qy, qz = state.orientation
        vx, vy, vz = state.linear_velocity
        wx, wy, wz = state.angular_velocity

        # rotation matrix body->world
        r00 = 1.0 - 2.0 * (qy * qy + qz * qz)
        r01 = 2.0 * (qx * qy - qz * qw)
        r02 = 2.0 * (qx * qz + qy * qw)
        r10 = 2.0 * (qx * qy + qz * qw)
        r11 = 1.0 - 2.0 * (qx * qx + qz * qz)
        r12 = 2.0 * (qy * qz - qx * qw)
        r20 = 2.0 * (qx * qz - qy * qw)
        r21 = 2.0 * (qy * qz + qx * qw)
        r22 = 1.0 - 2.0 * (qx * qx + qy * qy)

        # world angular velocity
        owx = r00 * wx + r01 * wy + r02 * wz
        owy = r10 * wx + r11 * wy + r12 * wz
        owz = r20 * wx + r21 * wy + r22 * wz

        # steering angles (Ackermann pair on the front axle)
        steer = action.steering * p.max_steer_angle
        if abs(steer) > 1e-9:
            radius = p.wheelbase / math.tan(abs(steer))
            inner = math.atan(p.wheelbase / (radius - p.track_width / 2.0))
            outer = math.atan(p.wheelbase / (radius + p.track_width / 2.0))
            if steer > 0.0:   # left turn: left wheel is inner
                steer_fl, steer_fr = inner, outer
            else:
                steer_fl, steer_fr = -outer, -inner
        else:
            steer_fl = steer_fr = steer
        wheel_steer = (steer_fl, steer_fr, 0.0, 0.0)

        sink = soil.sinkage
        droop_z = self._droop_z
        u_x, u_y, u_z = r02, r12, r22
        travel = p.suspension_travel

        # pass 1: wheel geometry and contact candidates
        contacts = []
        n_contact = 0
        for i in range(4):
            ox, oy = self._wheel_offsets[i]
            dx = px + r00 * ox + r01 * oy + r02 * droop_z
            dy = py + r10 * ox + r11 * oy + r12 * droop_z
            dz = pz + r20 * ox + r21 * oy + r22 * droop_z
            if u_z < MIN_UP_Z:
                contacts.append(None)
                continue
            node = self._node_index(dx, dy)
            scm = self._scm[node]
            h_surf = self._surface(dx, dy, sink if (sink and scm is not None) else None)
            c_raw = (h_surf + p.wheel_radius - dz) / u_z
            if c_raw <= 0.0:
                contacts.append(None)
                continue
            n_contact += 1
            contacts.append((dx, dy, dz, node, scm, h_surf, c_raw))

        m_eff = p.mass / n_contact if n_contact else p.mass

        fx_tot = 0.0
        fy_tot = 0.0
        fz_tot = 0.0
        tx_tot = 0.0
        ty_tot = 0.0
        tz_tot = 0.0
        new_comp = [0.0, 0.0, 0.0, 0.0]
        new_contact: list = [None, None, None, None]
        fmax_wheel = p.max_drive_force / 4.0
        inv_dt = 1.0 / dt

        for i in range(4):
            geo = contacts[i]
            if geo is None:
                continue
            dx, dy, dz, node, scm, h_surf, c_raw = geo

            if scm is None:
                # rigid: spring-damper suspension with bump stop
                c = c_raw if c_raw < travel else travel
                bump = c_raw - travel if c_raw > travel else 0.0
                wcx = dx + u_x * c
                wcy = dy + u_y * c
                wcz = dz + u_z * c
                # compression rate from hub velocity along the strut
                rhx = wcx - px
                rhy = wcy - py
                rhz = wcz - pz
                hvx = vx + owy * rhz - owz * rhy
                hvy = vy + owz * rhx - owx * rhz
                hvz = vz + owx * rhy - owy * rhx
                c_rate = -(hvx * u_x + hvy * u_y + hvz * u_z)
                f_s = p.suspension_stiffness * (c + BUMP_STOP_FACTOR * bump) + \
                    p.suspension_damping * c_rate
                if f_s < 0.0:
                    f_s = 0.0
                mu = self._friction[node]
            else:
                # deformable: equilibrium against the Bekker law, plastic update
                depth0 = c_raw * u_z   # wheel-bottom depth below the *sunk* surface
                s_old = sink.get(node, 0.0)
                depth0 += s_old        # total depth below the original surface
                mult = soil.hardening.get(node, 1.0)
                c, f_spring = self._solve_soil_compression(scm, depth0, u_z, mult)
                wcx = dx + u_x * c
                wcy = dy + u_y * c
                wcz = dz + u_z * c
                rhx = wcx - px
                rhy = wcy - py
                rhz = wcz - pz
                hvx = vx + owy * rhz - owz * rhy
                hvy = vy + owz * rhx - owx * rhz
                hvz = vz + owx * rhy - owy * rhx
                c_rate = -(hvx * u_x + hvy * u_y + hvz * u_z)
                approach = c_rate if c_rate > 0.0 else 0.0
                f_s = f_spring + p.suspension_damping * c_rate + scm.damping * approach
                if f_s < 0.0:
                    f_s = 0.0
                depth_new = depth0 - c * u_z
                if depth_new > s_old:
                    sink[node] = depth_new
                    soil.hardening[node] = 1.0 + scm.hardening * depth_new
                mu = scm.traction

            new_comp[i] = c if c <= travel else travel

            # suspension force along chassis up, applied at the hub
            fx_tot += f_s * u_x
            fy_tot += f_s * u_y
            fz_tot += f_s * u_z
            tx_tot += rhy * f_s * u_z - rhz * f_s * u_y
            ty_tot += rhz * f_s * u_x - rhx * f_s * u_z
            tz_tot += rhx * f_s * u_y - rhy * f_s * u_x

            # terrain normal and normal load for friction
            nx, ny, nz = self._normal(dx, dy)
            up_dot_n = u_x * nx + u_y * ny + u_z * nz
            if up_dot_n < 0.0:
                up_dot_n = 0.0
            n_load = f_s * up_dot_n
            if n_load <= 0.0:
                continue

            # contact point at ground level
            cpx = wcx
            cpy = wcy
            cpz = h_surf
            rcx = cpx - px
            rcy = cpy - py
            rcz = cpz - pz
            cvx = vx + owy * rcz - owz * rcy
            cvy = vy + owz * rcx - owx * rcz
            cvz = vz + owx * rcy - owy * rcx
            vn = cvx * nx + cvy * ny + cvz * nz
            tvx = cvx - vn * nx
            tvy = cvy - vn * ny
            tvz = cvz - vn * nz

            # wheel forward direction projected on the tangent plane
            sa = wheel_steer[i]
            cs = math.cos(sa)
            ss = math.sin(sa)
            fwx = r00 * cs + r01 * ss
            fwy = r10 * cs + r11 * ss
            fwz = r20 * cs + r21 * ss
            fdn = fwx * nx + fwy * ny + fwz * nz
            ftx = fwx - fdn * nx
            fty = fwy - fdn * ny
            ftz = fwz - fdn * nz
            fnorm = math.sqrt(ftx * ftx + fty * fty + ftz * ftz)
            if fnorm < 1e-9:
                continue
            ftx /= fnorm
            fty /= fnorm
            ftz /= fnorm
            # lateral = n x forward
            ltx = ny * ftz - nz * fty
            lty = nz * ftx - nx * ftz
            ltz = nx * fty - ny * ftx

            v_long = tvx * ftx + tvy * fty + tvz * ftz
            v_lat = tvx * ltx + tvy * lty + tvz * ltz

            # tangential gravity: g_t = g_vec - (g_vec.n)n with g_vec = (0,0,-g)
            gtx = GRAVITY * nz * nx
            gty = GRAVITY * nz * ny
            gtz = GRAVITY * nz * nz - GRAVITY
            g_long = gtx * ftx + gty * fty + gtz * ftz
            g_lat = gtx * ltx + gty * lty + gtz * ltz

            mu_n = mu * n_load
            drive_fade = 1.0 - (v_long / p.max_speed if v_long > 0.0 else 0.0)
            if drive_fade < 0.0:
                drive_fade = 0.0
            f_long = action.throttle * fmax_wheel * drive_fade

            brake_cmd = action.braking
            if action.throttle < PARKING_THROTTLE and brake_cmd < 1.0:
                brake_cmd = 1.0
            if brake_cmd > 0.0:
                want = -m_eff * (v_long * inv_dt + g_long)
                limit = brake_cmd * mu_n
                if want > limit:
                    want = limit
                elif want < -limit:
                    want = -limit
                f_long += want

            # rolling resistance
            if v_long > 0.01:
                f_long -= p.rolling_resistance * n_load
            elif v_long < -0.01:
                f_long += p.rolling_resistance * n_load

            if f_long > mu_n:
                f_long = mu_n
            elif f_long < -mu_n:
                f_long = -mu_n

            lat_budget = math.sqrt(mu_n * mu_n - f_long * f_long)
            f_lat = -m_eff * (v_lat * inv_dt + g_lat)
            if f_lat > lat_budget:
                f_lat = lat_budget
            elif f_lat < -lat_budget:
                f_lat = -lat_budget

            ffx = f_long * ftx + f_lat * ltx
            ffy = f_long * fty + f_lat * lty
            ffz = f_long * ftz + f_lat * ltz
            fx_tot += ffx
            fy_tot += ffy
            fz_tot += ffz
            tx_tot += rcy * ffz - rcz * ffy
            ty_tot += rcz * ffx - rcx * ffz
            tz_tot += rcx * ffy - rcy * ffx

            new_contact[i] = self.env.semantics.patches[
                self.env.node_patch_index.flat[node]].terrain_class

        # obstacle penalty contacts: 4 wheel spheres + chassis sphere
        bucket = self._obs_buckets.get(
            (int(px / self._obs_cell), int(py / self._obs_cell)))
        if bucket:
            spheres = []
            for i in range(4):
                geo = contacts[i]
                if geo is None:
                    ox, oy = self._wheel_offsets[i]
                    sx = px + r00 * ox + r01 * oy + r02 * droop_z
                    sy2 = py + r10 * ox + r11 * oy + r12 * droop_z
                    sz = pz + r20 * ox + r21 * oy + r22 * droop_z
                else:
                    c = new_comp[i]
                    sx = geo[0] + u_x * c
                    sy2 = geo[1] + u_y * c
                    sz = geo[2] + u_z * c
                spheres.append((sx, sy2, sz, p.wheel_radius))
            spheres.append((px, py, pz, p.chassis_radius))
            k_obs = p.obstacle_stiffness
            d_obs = self._obs_damping
            for ob in bucket:
                base_z = self._surface(ob.x, ob.y, None)
                top_z = base_z + ob.height
                for sx, sy2, sz, rho in spheres:
                    if sz - rho > top_z:
                        continue
                    ddx = sx - ob.x
                    ddy = sy2 - ob.y
                    dist = math.sqrt(ddx * ddx + ddy * ddy)
                    pen = ob.footprint_radius + rho - dist
                    if pen <= 0.0 or dist < 1e-9:
                        continue
                    nxo = ddx / dist
                    nyo = ddy / dist
                    rsx = sx - px
                    rsy = sy2 - py
                    rsz = sz - pz
                    svx = vx + owy * rsz - owz * rsy
                    svy = vy + owz * rsx - owx * rsz
                    approach = -(svx * nxo + svy * nyo)
                    f = k_obs * pen + (d_obs * approach if approach > 0.0 else 0.0)
                    if f < 0.0:
                        f = 0.0
                    ffx = f * nxo
                    ffy = f * nyo
                    fx_tot += ffx
                    fy_tot += ffy
                    tx_tot += rsy * 0.0 - rsz * ffy
                    ty_tot += rsz * ffx - rsx * 0.0
                    tz_tot += rsx * ffy - rsy * ffx

        # aerodynamic / chassis drag at the CoM
        speed = math.sqrt(vx * vx + vy * vy + vz * vz)
        if speed > 1e-9:
            fd = p.drag_coefficient * speed
            fx_tot -= fd * vx
            fy_tot -= fd * vy
            fz_tot -= fd * vz

        # integrate (semi-implicit Euler)
        inv_m = 1.0 / p.mass
        vx += (fx_tot * inv_m) * dt
        vy += (fy_tot * inv_m) * dt
        vz += (fz_tot * inv_m - GRAVITY) * dt

        ixx, iyy, izz = p.inertia_diag
        # world torque -> body frame
        tbx = r00 * tx_tot + r10 * ty_tot + r20 * tz_tot
        tby = r01 * tx_tot + r11 * ty_tot + r21 * tz_tot
        tbz = r02 * tx_tot + r12 * ty_tot + r22 * tz_tot
        wx += dt * (tbx - (wy * izz * wz - wz * iyy * wy)) / ixx
        wy += dt * (tby - (wz * ixx * wx - wx * izz * wz)) / iyy
        wz += dt * (tbz - (wx * iyy * wy - wy * ixx * wx)) / izz

        px += vx * dt
        py += vy * dt
        pz += vz * dt

        half_dt = 0.5 * dt
        dqw = -qx * wx - qy * wy - qz * wz
        dqx = qw * wx + qy * wz - qz * wy
        dqy = qw * wy + qz * wx - qx * wz
        dqz = qw * wz + qx * wy - qy * wx
        qw += dqw * half_dt
        qx += dqx * half_dt
        qy += dqy * half_dt
        qz += dqz * half_dt
        norm = math.sqrt(qw * qw + qx * qx + qy * qy + qz * qz)
        qw /= norm
        qx /= norm
        qy /= norm
        qz /= norm

        if not (math.isfinite(px) and math.isfinite(py) and math.isfinite(pz)
                and math.isfinite(vx) and math.isfinite(vy) and math.isfinite(vz)
                and math.isfinite(wx) and math.isfinite(wy) and math.isfinite(wz)):
            raise SimulationFault("non-finite vehicle state", last_state=state)

        new_state = VehicleState(
            position=(px, py, pz),
            orientation=(qw, qx, qy, qz),
            linear_velocity=(vx, vy, vz),
            angular_velocity=(wx, wy, wz),
            wheel_compression=tuple(new_comp),
            wheel_contact=tuple(new_contact),
            sim_time=state.sim_time + dt,
        )
        return new_state, soil
