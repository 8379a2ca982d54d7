/**
 * WebGL scene for the space-time cube: ray-marched volume, isosurface
 * overlay, hour-slice plane, and voxel picking. The time axis renders
 * vertically (hours stack upward); low-access voxels fade out per the
 * opacity curve so high-access regions stand out.
 */

import * as THREE from "three";
import { OrbitControls } from "three/addons/controls/OrbitControls.js";

import type { Mesh as IsoMesh } from "./marchingcubes.js";
import { pickVoxel, type PickResult } from "./picking.js";
import type { CubeData } from "./stcube.js";
import {
  applyTransform,
  colormapLut,
  type ColormapId,
  type DisplayTransform,
  type OpacityCurve,
} from "./transfer.js";

/** Values below this are treated as the NaN sentinel inside textures. */
const SENTINEL_CUTOFF = -1e7;
const SENTINEL = -1e8;

const VOLUME_VERTEX = /* glsl */ `
out vec3 vOrigin;
out vec3 vDirection;
uniform vec3 uBoxSize;

void main() {
  vec4 worldPos = modelMatrix * vec4(position, 1.0);
  vOrigin = (inverse(modelMatrix) * vec4(cameraPosition, 1.0)).xyz;
  vDirection = position - vOrigin;
  gl_Position = projectionMatrix * viewMatrix * worldPos;
}
`;

const VOLUME_FRAGMENT = /* glsl */ `
precision highp float;
precision highp sampler3D;

in vec3 vOrigin;
in vec3 vDirection;
out vec4 outColor;

uniform sampler3D uData;
uniform sampler2D uLut;
uniform vec3 uBoxSize;     // (nx, nt, ny) in object units
uniform float uLo;         // transformed opacity ramp endpoints
uniform float uHi;
uniform float uMaxOpacity;
uniform int uTransform;    // 0 none, 1 log1p
uniform int uSteps;

vec2 boxIntersect(vec3 ro, vec3 rd) {
  vec3 inv = 1.0 / rd;
  vec3 tA = (vec3(-0.5) * uBoxSize - ro) * inv;
  vec3 tB = (vec3(0.5) * uBoxSize - ro) * inv;
  vec3 tMin = min(tA, tB);
  vec3 tMax = max(tA, tB);
  return vec2(max(max(tMin.x, tMin.y), tMin.z), min(min(tMax.x, tMax.y), tMax.z));
}

void main() {
  vec3 rd = normalize(vDirection);
  vec2 hit = boxIntersect(vOrigin, rd);
  if (hit.x > hit.y) discard;
  hit.x = max(hit.x, 0.0);

  vec4 acc = vec4(0.0);
  float stepLen = (hit.y - hit.x) / float(uSteps);
  for (int s = 0; s < 512; s++) {
    if (s >= uSteps || acc.a > 0.98) break;
    vec3 p = vOrigin + rd * (hit.x + (float(s) + 0.5) * stepLen);
    // object space [-box/2, box/2] -> texture space [0,1]; y is time
    vec3 tc = p / uBoxSize + 0.5;
    float raw = texture(uData, vec3(tc.x, tc.z, tc.y)).r;
    if (raw < ${SENTINEL_CUTOFF.toExponential(1)}) continue;
    float v = uTransform == 1 ? log(1.0 + max(raw, 0.0)) : raw;
    float u = clamp((v - uLo) / max(uHi - uLo, 1e-12), 0.0, 1.0);
    float alpha = u * uMaxOpacity * (24.0 * stepLen / (uBoxSize.x + uBoxSize.y + uBoxSize.z));
    alpha = clamp(alpha * 8.0, 0.0, 1.0);
    vec3 rgb = texture(uLut, vec2(u, 0.5)).rgb;
    acc.rgb += (1.0 - acc.a) * alpha * rgb;
    acc.a += (1.0 - acc.a) * alpha;
  }
  if (acc.a < 0.004) discard;
  outColor = acc;
}
`;

export interface ViewerOptions {
  canvas: HTMLCanvasElement;
  onPick?: (pick: PickResult | null) => void;
}

export class CubeViewer {
  readonly renderer: THREE.WebGLRenderer;
  readonly scene: THREE.Scene;
  readonly camera: THREE.PerspectiveCamera;
  readonly controls: OrbitControls;

  private cube: CubeData | null = null;
  private volumeMesh: THREE.Mesh | null = null;
  private volumeMaterial: THREE.ShaderMaterial | null = null;
  private isoMesh: THREE.Mesh | null = null;
  private slicePlane: THREE.Mesh | null = null;
  private frame: THREE.LineSegments | null = null;
  private lutTexture: THREE.DataTexture | null = null;
  private scale = 1;

  transform: DisplayTransform = "log1p";
  curve: OpacityCurve = { lo: 0, hi: 1, maxOpacity: 0.85 };
  sliceHour: number | null = null;
  private colormapId: ColormapId = "viridis";

  constructor(private opts: ViewerOptions) {
    this.renderer = new THREE.WebGLRenderer({ canvas: opts.canvas, antialias: true });
    this.renderer.setPixelRatio(window.devicePixelRatio);
    this.scene = new THREE.Scene();
    this.scene.background = new THREE.Color(0x10131a);
    this.camera = new THREE.PerspectiveCamera(45, 1, 0.01, 100);
    this.camera.position.set(2.4, 1.8, 2.4);
    this.controls = new OrbitControls(this.camera, opts.canvas);
    this.controls.enableDamping = true;
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.7));
    const sun = new THREE.DirectionalLight(0xffffff, 1.2);
    sun.position.set(3, 5, 2);
    this.scene.add(sun);

    opts.canvas.addEventListener("click", (ev) => this.handlePick(ev));
    const animate = () => {
      requestAnimationFrame(animate);
      this.controls.update();
      this.resizeToDisplay();
      this.renderer.render(this.scene, this.camera);
    };
    animate();
  }

  get maxTextureDim(): number {
    const gl = this.renderer.getContext() as WebGL2RenderingContext;
    return gl.getParameter(gl.MAX_3D_TEXTURE_SIZE) as number;
  }

  /** Upload a cube and (re)build the volume rendering. */
  setCube(cube: CubeData): void {
    this.cube = cube;
    this.disposeLayer("volume");
    const { nx, ny, nt } = cube;

    const data = new Float32Array(cube.values.length);
    for (let i = 0; i < data.length; i++) {
      const v = cube.values[i];
      data[i] = Number.isFinite(v) ? v : SENTINEL;
    }
    const texture = new THREE.Data3DTexture(data, nx, ny, nt);
    texture.format = THREE.RedFormat;
    texture.type = THREE.FloatType;
    const linearOk = this.renderer.extensions.get("OES_texture_float_linear") !== null;
    texture.minFilter = texture.magFilter = linearOk ? THREE.LinearFilter : THREE.NearestFilter;
    texture.unpackAlignment = 1;
    texture.needsUpdate = true;

    this.scale = 2 / Math.max(nx, ny, nt);
    const box = new THREE.Vector3(nx * this.scale, nt * this.scale, ny * this.scale);
    this.lutTexture = this.makeLut(this.colormapId);
    this.volumeMaterial = new THREE.ShaderMaterial({
      glslVersion: THREE.GLSL3,
      vertexShader: VOLUME_VERTEX,
      fragmentShader: VOLUME_FRAGMENT,
      side: THREE.BackSide,
      transparent: true,
      depthWrite: false,
      uniforms: {
        uData: { value: texture },
        uLut: { value: this.lutTexture },
        uBoxSize: { value: box },
        uLo: { value: this.curve.lo },
        uHi: { value: this.curve.hi },
        uMaxOpacity: { value: this.curve.maxOpacity },
        uTransform: { value: this.transform === "log1p" ? 1 : 0 },
        uSteps: { value: Math.min(2 * Math.max(nx, ny, nt), 512) },
      },
    });
    this.volumeMesh = new THREE.Mesh(new THREE.BoxGeometry(box.x, box.y, box.z), this.volumeMaterial);
    this.scene.add(this.volumeMesh);

    this.frame = new THREE.LineSegments(
      new THREE.EdgesGeometry(new THREE.BoxGeometry(box.x, box.y, box.z)),
      new THREE.LineBasicMaterial({ color: 0x5a6477 }),
    );
    this.scene.add(this.frame);
    this.applySlice();
  }

  setColormap(id: ColormapId): void {
    this.colormapId = id;
    if (this.volumeMaterial) {
      this.lutTexture = this.makeLut(id);
      this.volumeMaterial.uniforms.uLut.value = this.lutTexture;
    }
    this.applySlice();
  }

  setTransferFunction(transform: DisplayTransform, curve: OpacityCurve): void {
    this.transform = transform;
    this.curve = curve;
    if (this.volumeMaterial) {
      this.volumeMaterial.uniforms.uLo.value = curve.lo;
      this.volumeMaterial.uniforms.uHi.value = curve.hi;
      this.volumeMaterial.uniforms.uMaxOpacity.value = curve.maxOpacity;
      this.volumeMaterial.uniforms.uTransform.value = transform === "log1p" ? 1 : 0;
    }
    this.applySlice();
  }

  /** Replace the isosurface overlay with an extracted mesh (or clear it). */
  setIsosurfaceMesh(mesh: IsoMesh | null): void {
    this.disposeLayer("iso");
    if (!mesh || !this.cube || mesh.triangles.length === 0) return;
    const { nx, ny, nt } = this.cube;
    const positions = new Float32Array(mesh.positions.length);
    for (let i = 0; i < mesh.positions.length; i += 3) {
      // lattice coords -> centered object space; +0.5 puts lattice points at
      // voxel centers, matching the volume texture sampling
      positions[i] = (mesh.positions[i] + 0.5 - nx / 2) * this.scale;
      positions[i + 1] = (mesh.positions[i + 2] + 0.5 - nt / 2) * this.scale;
      positions[i + 2] = (mesh.positions[i + 1] + 0.5 - ny / 2) * this.scale;
    }
    const geometry = new THREE.BufferGeometry();
    geometry.setAttribute("position", new THREE.BufferAttribute(positions, 3));
    geometry.setIndex(new THREE.BufferAttribute(mesh.triangles, 1));
    geometry.computeVertexNormals();
    this.isoMesh = new THREE.Mesh(
      geometry,
      new THREE.MeshStandardMaterial({
        color: 0xffc24b,
        roughness: 0.35,
        metalness: 0.1,
        transparent: true,
        opacity: 0.55,
        side: THREE.DoubleSide,
      }),
    );
    this.scene.add(this.isoMesh);
  }

  /** Show one hour as a heatmap plane inside the cube; null restores volume. */
  setSlice(hour: number | null): void {
    if (hour !== null && this.cube && (hour < 0 || hour >= this.cube.nt)) {
      throw new Error(`slice hour ${hour} out of range 0..${this.cube.nt - 1}`);
    }
    this.sliceHour = hour;
    this.applySlice();
  }

  private applySlice(): void {
    this.disposeLayer("slice");
    const cube = this.cube;
    if (!cube) return;
    const showVolume = this.sliceHour === null;
    if (this.volumeMesh) this.volumeMesh.visible = showVolume;
    if (showVolume) return;

    const hour = this.sliceHour as number;
    const { nx, ny } = cube;
    const lut = colormapLut(this.colormapId);
    const rgba = new Uint8Array(nx * ny * 4);
    for (let y = 0; y < ny; y++) {
      for (let x = 0; x < nx; x++) {
        const v = cube.voxel(x, y, hour);
        const o = (y * nx + x) * 4;
        if (!Number.isFinite(v)) {
          rgba[o + 3] = 0;
          continue;
        }
        const tv = applyTransform(this.transform, v);
        const u = Math.min(
          Math.max((tv - this.curve.lo) / Math.max(this.curve.hi - this.curve.lo, 1e-12), 0),
          1,
        );
        const li = Math.min(255, Math.round(u * 255)) * 4;
        rgba[o] = lut[li];
        rgba[o + 1] = lut[li + 1];
        rgba[o + 2] = lut[li + 2];
        rgba[o + 3] = 235;
      }
    }
    const texture = new THREE.DataTexture(rgba, nx, ny, THREE.RGBAFormat);
    texture.needsUpdate = true;
    texture.magFilter = THREE.NearestFilter;
    const plane = new THREE.Mesh(
      new THREE.PlaneGeometry(nx * this.scale, ny * this.scale),
      new THREE.MeshBasicMaterial({ map: texture, transparent: true, side: THREE.DoubleSide }),
    );
    plane.rotation.x = -Math.PI / 2;
    plane.position.y = (hour + 0.5 - cube.nt / 2) * this.scale;
    this.slicePlane = plane;
    this.scene.add(plane);
  }

  /** Screen-space pick: first visible voxel along the ray, CPU-exact value. */
  pickAt(clientX: number, clientY: number): PickResult | null {
    const cube = this.cube;
    if (!cube) return null;
    const rect = this.opts.canvas.getBoundingClientRect();
    const ndc = new THREE.Vector2(
      ((clientX - rect.left) / rect.width) * 2 - 1,
      -((clientY - rect.top) / rect.height) * 2 + 1,
    );
    const raycaster = new THREE.Raycaster();
    raycaster.setFromCamera(ndc, this.camera);
    const o = raycaster.ray.origin;
    const d = raycaster.ray.direction;
    // world -> lattice box coords [0,nx]x[0,ny]x[0,nt] (y/t axes swapped back)
    const toLattice = (v: THREE.Vector3): [number, number, number] => [
      v.x / this.scale + cube.nx / 2,
      v.z / this.scale + cube.ny / 2,
      v.y / this.scale + cube.nt / 2,
    ];
    const origin = toLattice(o);
    const dir: [number, number, number] = [d.x, d.z, d.y];
    return pickVoxel(cube, origin, dir, {
      transform: this.transform,
      curve: this.curve,
      sliceHour: this.sliceHour,
    });
  }

  private handlePick(ev: MouseEvent): void {
    if (!this.opts.onPick) return;
    this.opts.onPick(this.pickAt(ev.clientX, ev.clientY));
  }

  private makeLut(id: ColormapId): THREE.DataTexture {
    const texture = new THREE.DataTexture(colormapLut(id), 256, 1, THREE.RGBAFormat);
    texture.needsUpdate = true;
    return texture;
  }

  private disposeLayer(which: "volume" | "iso" | "slice"): void {
    const kill = (obj: THREE.Mesh | THREE.LineSegments | null) => {
      if (!obj) return;
      this.scene.remove(obj);
      obj.geometry.dispose();
    };
    if (which === "volume") {
      kill(this.volumeMesh);
      kill(this.frame);
      this.volumeMesh = null;
      this.frame = null;
    } else if (which === "iso") {
      kill(this.isoMesh);
      this.isoMesh = null;
    } else {
      kill(this.slicePlane);
      this.slicePlane = null;
    }
  }

  private resizeToDisplay(): void {
    const canvas = this.opts.canvas;
    const w = canvas.clientWidth;
    const h = canvas.clientHeight;
    const needs = canvas.width !== Math.floor(w * window.devicePixelRatio);
    if (needs && w > 0 && h > 0) {
      this.renderer.setSize(w, h, false);
      this.camera.aspect = w / h;
      this.camera.updateProjectionMatrix();
    }
  }
}
