/** Virtual stylus: pointer drag stands in for the haptic device.
 *
 * Displacement lives in centimeters inside a square workspace (default
 * +/-5 cm, which the server maps to +/-10 m/s).  Releasing the pointer
 * spring-returns the knob to center so the command decays to zero, mimicking
 * letting go of a sprung stick.
 */

export class VirtualStylus {
  readonly maxCm: number;
  private disp: [number, number] = [0, 0];
  private held = false;

  /** Spring-return rate (1/s): fraction of remaining displacement shed per second. */
  private readonly returnRate: number;

  constructor(maxCm = 5.0, returnRate = 12.0) {
    this.maxCm = maxCm;
    this.returnRate = returnRate;
  }

  get displacementCm(): [number, number] {
    return [this.disp[0], this.disp[1]];
  }

  get isHeld(): boolean {
    return this.held;
  }

  private clamp(x: number): number {
    return Math.min(this.maxCm, Math.max(-this.maxCm, x));
  }

  press(xCm: number, yCm: number): void {
    this.held = true;
    this.disp = [this.clamp(xCm), this.clamp(yCm)];
  }

  move(xCm: number, yCm: number): void {
    if (!this.held) return;
    this.disp = [this.clamp(xCm), this.clamp(yCm)];
  }

  release(): void {
    this.held = false;
  }

  /** Advance the spring return; no-op while held. Returns the displacement. */
  tick(dtSeconds: number): [number, number] {
    if (!this.held) {
      const decay = Math.exp(-this.returnRate * dtSeconds);
      this.disp = [this.disp[0] * decay, this.disp[1] * decay];
      if (Math.abs(this.disp[0]) < 1e-3 && Math.abs(this.disp[1]) < 1e-3) {
        this.disp = [0, 0];
      }
    }
    return this.displacementCm;
  }
}
