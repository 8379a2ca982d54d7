/**
 * STCUBE01 reader: magic, length-prefixed JSON header, float32 voxel payload
 * (x-fastest, then y, then t; NaN marks inactive voxels).
 *
 * The payload stays in one Float32Array so picked values are bit-identical to
 * the file contents; display transforms never touch this buffer.
 */

export const MAGIC = "STCUBE01";

export interface CubeHeader {
  nx: number;
  ny: number;
  nt: number;
  origin_x: number;
  origin_y: number;
  cell_size: number;
  hour0: number;
  transform: string;
  value_unit: string;
}

export class CubeData {
  readonly header: CubeHeader;
  readonly values: Float32Array;
  /** Set when the GPU could not take the full lattice and it was downsampled. */
  readonly downsampledFrom: [number, number, number] | null;

  constructor(
    header: CubeHeader,
    values: Float32Array,
    downsampledFrom: [number, number, number] | null = null,
  ) {
    const expected = header.nx * header.ny * header.nt;
    if (values.length !== expected) {
      throw new Error(`payload has ${values.length} voxels, header says ${expected}`);
    }
    this.header = header;
    this.values = values;
    this.downsampledFrom = downsampledFrom;
  }

  get nx(): number { return this.header.nx; }
  get ny(): number { return this.header.ny; }
  get nt(): number { return this.header.nt; }

  index(x: number, y: number, t: number): number {
    return (t * this.ny + y) * this.nx + x;
  }

  /** Raw lattice value; NaN for inactive voxels and out-of-range indices. */
  voxel(x: number, y: number, t: number): number {
    if (x < 0 || y < 0 || t < 0 || x >= this.nx || y >= this.ny || t >= this.nt) {
      return NaN;
    }
    return this.values[this.index(x, y, t)];
  }

  /** Valid (finite) voxel values, for percentile work. */
  validValues(): Float64Array {
    const out = new Float64Array(this.values.length);
    let n = 0;
    for (let i = 0; i < this.values.length; i++) {
      const v = this.values[i];
      if (Number.isFinite(v)) out[n++] = v;
    }
    return out.subarray(0, n);
  }

  /** One hour layer as [col, row, value] triples over valid voxels. */
  sliceTriples(t: number): Array<[number, number, number]> {
    if (t < 0 || t >= this.nt) throw new Error(`hour ${t} out of range 0..${this.nt - 1}`);
    const out: Array<[number, number, number]> = [];
    for (let y = 0; y < this.ny; y++) {
      for (let x = 0; x < this.nx; x++) {
        const v = this.voxel(x, y, t);
        if (Number.isFinite(v)) out.push([x, y, v]);
      }
    }
    return out;
  }
}

export function parseCube(buffer: ArrayBuffer): CubeData {
  const bytes = new Uint8Array(buffer);
  if (bytes.length < 12) throw new Error("file too short to be a cube");
  const magic = new TextDecoder().decode(bytes.subarray(0, 8));
  if (magic !== MAGIC) {
    throw new Error(`bad magic ${JSON.stringify(magic)}, expected ${MAGIC}`);
  }
  const view = new DataView(buffer);
  const headerLength = view.getUint32(8, true);
  const headerText = new TextDecoder().decode(bytes.subarray(12, 12 + headerLength));
  const header = JSON.parse(headerText) as CubeHeader;
  const payloadOffset = 12 + headerLength;
  const expectedBytes = header.nx * header.ny * header.nt * 4;
  const actualBytes = bytes.length - payloadOffset;
  if (actualBytes !== expectedBytes) {
    throw new Error(`payload is ${actualBytes} bytes, expected ${expectedBytes}`);
  }
  // copy so the typed array is aligned and independent of the fetch buffer
  const values = new Float32Array(expectedBytes / 4);
  values.set(new Float32Array(buffer.slice(payloadOffset, payloadOffset + expectedBytes)));
  return new CubeData(header, values);
}

async function fetchRange(url: string, start: number, end: number): Promise<{ buffer: ArrayBuffer; ranged: boolean }> {
  const resp = await fetch(url, { headers: { Range: `bytes=${start}-${end}` } });
  if (!resp.ok && resp.status !== 206) {
    throw new Error(`GET ${url} failed: ${resp.status} ${resp.statusText}`);
  }
  return { buffer: await resp.arrayBuffer(), ranged: resp.status === 206 };
}

/**
 * Stream a cube over HTTP: the magic and JSON header come from a small range
 * request, then the payload is ranged separately. Servers without range
 * support transparently fall back to one whole-body fetch.
 */
export async function loadCube(url: string): Promise<CubeData> {
  const head = await fetchRange(url, 0, 65535);
  if (!head.ranged) {
    return parseCube(head.buffer);
  }
  const bytes = new Uint8Array(head.buffer);
  if (bytes.length < 12) throw new Error("file too short to be a cube");
  const magic = new TextDecoder().decode(bytes.subarray(0, 8));
  if (magic !== MAGIC) throw new Error(`bad magic ${JSON.stringify(magic)}, expected ${MAGIC}`);
  const headerLength = new DataView(head.buffer).getUint32(8, true);
  if (12 + headerLength > bytes.length) {
    // outsized header: give up on streaming and take the whole file
    const whole = await fetch(url);
    if (!whole.ok) throw new Error(`GET ${url} failed: ${whole.status}`);
    return parseCube(await whole.arrayBuffer());
  }
  const header = JSON.parse(
    new TextDecoder().decode(bytes.subarray(12, 12 + headerLength)),
  ) as CubeHeader;
  const payloadStart = 12 + headerLength;
  const payloadBytes = header.nx * header.ny * header.nt * 4;
  let payload: ArrayBuffer;
  if (bytes.length >= payloadStart + payloadBytes) {
    payload = head.buffer.slice(payloadStart, payloadStart + payloadBytes);
  } else {
    const rest = await fetchRange(url, payloadStart, payloadStart + payloadBytes - 1);
    payload = rest.buffer;
    if (payload.byteLength !== payloadBytes) {
      throw new Error(`payload is ${payload.byteLength} bytes, expected ${payloadBytes}`);
    }
  }
  const values = new Float32Array(payloadBytes / 4);
  values.set(new Float32Array(payload.slice(0, payloadBytes)));
  return new CubeData(header, values);
}

/**
 * Integer-stride downsample so every dimension fits the GPU limit. Keeps the
 * first voxel of each stride block (no filtering: the viewer must not invent
 * values that picking could then report).
 */
export function downsampleToFit(cube: CubeData, maxDim: number): CubeData {
  const { nx, ny, nt } = cube;
  if (nx <= maxDim && ny <= maxDim && nt <= maxDim) return cube;
  const stride = Math.ceil(Math.max(nx, ny, nt) / maxDim);
  const mx = Math.ceil(nx / stride);
  const my = Math.ceil(ny / stride);
  const mt = Math.ceil(nt / stride);
  const values = new Float32Array(mx * my * mt);
  for (let t = 0; t < mt; t++) {
    for (let y = 0; y < my; y++) {
      for (let x = 0; x < mx; x++) {
        values[(t * my + y) * mx + x] = cube.voxel(x * stride, y * stride, t * stride);
      }
    }
  }
  const header: CubeHeader = {
    ...cube.header,
    nx: mx,
    ny: my,
    nt: mt,
    cell_size: cube.header.cell_size * stride,
  };
  return new CubeData(header, values, [nx, ny, nt]);
}
