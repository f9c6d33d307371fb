/**
 * Fixed-height windowing for the tree list.  With ten-thousand-plus rows the
 * DOM only ever holds the slice in view plus a small overscan margin; the
 * rest is represented by two spacer heights.
 */

export interface VirtualWindow {
  /** index of the first materialized row */
  start: number;
  /** one past the last materialized row */
  end: number;
  topPad: number;
  bottomPad: number;
  totalHeight: number;
}

export function computeWindow(
  rowCount: number,
  rowHeight: number,
  scrollTop: number,
  viewportHeight: number,
  overscan = 10,
): VirtualWindow {
  if (rowHeight <= 0) throw new RangeError("rowHeight must be positive");
  if (rowCount < 0) throw new RangeError("rowCount must be >= 0");
  const clampedTop = Math.max(0, scrollTop);
  const first = Math.floor(clampedTop / rowHeight);
  const visible = Math.ceil(viewportHeight / rowHeight) + 1;
  const start = Math.max(0, first - overscan);
  const end = Math.min(rowCount, first + visible + overscan);
  return {
    start,
    end: Math.max(start, end),
    topPad: start * rowHeight,
    bottomPad: Math.max(0, rowCount - Math.max(start, end)) * rowHeight,
    totalHeight: rowCount * rowHeight,
  };
}
