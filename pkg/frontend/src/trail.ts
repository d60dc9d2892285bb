/** Fixed-capacity ring buffer for the trajectory trail. */

export class TrailBuffer {
  private readonly capacity: number;
  private items: Array<[number, number]> = [];
  private start = 0;

  constructor(capacity = 2000) {
    if (capacity < 1) throw new Error("trail capacity must be positive");
    this.capacity = capacity;
  }

  get length(): number {
    return this.items.length;
  }

  push(x: number, y: number): void {
    if (this.items.length < this.capacity) {
      this.items.push([x, y]);
    } else {
      this.items[this.start] = [x, y];
      this.start = (this.start + 1) % this.capacity;
    }
  }

  clear(): void {
    this.items = [];
    this.start = 0;
  }

  /** Points oldest first. */
  points(): Array<[number, number]> {
    return this.items.slice(this.start).concat(this.items.slice(0, this.start));
  }
}
