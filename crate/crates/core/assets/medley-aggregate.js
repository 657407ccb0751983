// Client-side view data for exported dashboards. Mirrors the server's view
// computation so that filtered views match what the server would emit.
(function (root) {
  'use strict';

  var HISTOGRAM_BINS = 10;
  var SCATTER_ROW_CAP = 5000;

  function Table(payload) {
    this.columns = payload.columns;
    this.types = payload.types;
    this.years = payload.years;
    this.ranges = payload.ranges;
    this.rowCount = payload.rowCount;
  }

  function yearOf(date) {
    return parseInt(date.slice(0, 4), 10);
  }

  function asText(s) {
    return typeof s === 'number' ? String(s) : s;
  }

  Table.prototype.matchesValue = function (attr, v, s) {
    var t = this.types[attr];
    if (t === 'Q') return v === Number(s);
    if (t === 'T') return typeof s === 'number' ? yearOf(v) === s : v === s;
    return v === asText(s);
  };

  Table.prototype.inRange = function (attr, v, lo, hi) {
    var t = this.types[attr];
    if (t === 'Q') return v >= Number(lo) && v <= Number(hi);
    if (t === 'T') {
      var a = typeof lo === 'number' ? lo + '-01-01' : lo;
      var b = typeof hi === 'number' ? hi + '-12-31' : hi;
      return v >= a && v <= b;
    }
    return v >= asText(lo) && v <= asText(hi);
  };

  Table.prototype.matches = function (p, row) {
    var col = this.columns[p.attribute];
    if (!col) return false;
    var v = col[row];
    if (v === null || v === undefined) return false;
    if (p.op === 'range') return this.inRange(p.attribute, v, p.min, p.max);
    var values = p.op === 'eq' ? [p.value] : p.values;
    for (var i = 0; i < values.length; i++) {
      if (this.matchesValue(p.attribute, v, values[i])) return true;
    }
    return false;
  };

  Table.prototype.rowPasses = function (filters, row) {
    for (var i = 0; i < filters.length; i++) {
      if (!this.matches(filters[i], row)) return false;
    }
    return true;
  };

  function compareKeys(a, b) {
    for (var i = 0; i < a.length; i++) {
      var x = a[i], y = b[i];
      if (x === y) continue;
      var xn = typeof x === 'number', yn = typeof y === 'number';
      if (xn !== yn) return xn ? -1 : 1;
      return x < y ? -1 : 1;
    }
    return 0;
  }

  // parts: [{attr, bin: null | 'year' | 'month'}]
  Table.prototype.aggregate = function (agg, measure, parts, filters) {
    var groups = new Map();
    var mcol = measure ? this.columns[measure] : null;
    for (var row = 0; row < this.rowCount; row++) {
      if (!this.rowPasses(filters, row)) continue;
      var key = [];
      var missing = false;
      for (var i = 0; i < parts.length; i++) {
        var v = this.columns[parts[i].attr][row];
        if (v === null || v === undefined) { missing = true; break; }
        if (parts[i].bin === 'year') v = yearOf(v);
        else if (parts[i].bin === 'month') v = v.slice(0, 7);
        key.push(v);
      }
      if (missing) continue;
      var id = JSON.stringify(key);
      var acc = groups.get(id);
      if (!acc) { acc = { key: key, sum: 0, n: 0 }; groups.set(id, acc); }
      if (mcol) {
        var m = mcol[row];
        if (m !== null && m !== undefined) { acc.sum += m; acc.n += 1; }
      } else {
        acc.n += 1;
      }
    }
    var out = [];
    groups.forEach(function (acc) {
      if (acc.n === 0) return;
      var value = agg === 'Sum' ? acc.sum : agg === 'Mean' ? acc.sum / acc.n : acc.n;
      out.push({ key: acc.key, value: value });
    });
    out.sort(function (a, b) { return compareKeys(a.key, b.key); });
    return out;
  };

  function applyLimit(rows, limit) {
    if (limit === undefined || limit === null || rows.length <= limit) return rows;
    var order = rows.map(function (_, i) { return i; });
    order.sort(function (a, b) { return rows[b].value - rows[a].value; });
    var keep = new Array(rows.length).fill(false);
    for (var i = 0; i < limit; i++) keep[order[i]] = true;
    return rows.filter(function (_, i) { return keep[i]; });
  }

  function hasYear(years, y) {
    return years.indexOf(y) >= 0;
  }

  Table.prototype.yearOverYear = function (measure, temporal, dims, year, filters) {
    var years = this.years[temporal] || [];
    if (years.length < 2 || !hasYear(years, year) || !hasYear(years, year - 1)) return null;
    var parts = dims.map(function (d) { return { attr: d, bin: null }; });
    parts.push({ attr: temporal, bin: 'year' });
    var all = filters.concat([{ op: 'range', attribute: temporal, min: year - 1, max: year }]);
    var per = new Map();
    this.aggregate('Sum', measure, parts, all).forEach(function (r) {
      var y = r.key[r.key.length - 1];
      var key = r.key.slice(0, -1);
      var id = JSON.stringify(key);
      var e = per.get(id);
      if (!e) { e = { key: key, current: 0, previous: 0 }; per.set(id, e); }
      if (y === year) e.current += r.value; else e.previous += r.value;
    });
    var rows = [];
    per.forEach(function (e) { rows.push(e); });
    rows.sort(function (a, b) { return compareKeys(a.key, b.key); });
    return rows;
  };

  Table.prototype.yearlyChange = function (measure, temporal, filters) {
    var years = this.years[temporal] || [];
    if (years.length < 2) return null;
    var sums = new Map();
    this.aggregate('Sum', measure, [{ attr: temporal, bin: 'year' }], filters).forEach(function (r) {
      sums.set(r.key[0], r.value);
    });
    var value = function (y) { return sums.has(y) ? sums.get(y) : 0; };
    var rows = [];
    for (var y = years[0] + 1; y <= years[years.length - 1]; y++) {
      var v = value(y);
      var change = v - value(y - 1);
      rows.push({ t: y, value: change, previous: v - change });
    }
    return rows;
  };

  Table.prototype.histogram = function (attr, filters) {
    var range = this.ranges[attr];
    if (!range) return [];
    var lo = range[0], hi = range[1];
    var bins = hi > lo ? HISTOGRAM_BINS : 1;
    var width = hi > lo ? (hi - lo) / bins : 0;
    var counts = new Array(bins).fill(0);
    var col = this.columns[attr];
    for (var row = 0; row < this.rowCount; row++) {
      var v = col[row];
      if (v === null || v === undefined || !this.rowPasses(filters, row)) continue;
      var idx = width > 0 ? Math.min(Math.floor((v - lo) / width), bins - 1) : 0;
      counts[idx] += 1;
    }
    return counts.map(function (c, i) {
      return { start: lo + width * i, end: i + 1 === bins ? hi : lo + width * (i + 1), value: c };
    });
  };

  Table.prototype.scatter = function (x, y, filters) {
    var xs = this.columns[x], ys = this.columns[y];
    var points = [];
    for (var row = 0; row < this.rowCount; row++) {
      var a = xs[row], b = ys[row];
      if (a === null || a === undefined || b === null || b === undefined) continue;
      if (!this.rowPasses(filters, row)) continue;
      points.push({ row: row, x: a, y: b });
    }
    var n = points.length;
    if (n <= SCATTER_ROW_CAP) return points;
    var out = [];
    for (var i = 0; i < SCATTER_ROW_CAP; i++) out.push(points[Math.floor((i * n) / SCATTER_ROW_CAP)]);
    return out;
  };

  function dimRow(key, extra) {
    var row = {};
    key.forEach(function (k, i) { row['d' + i] = k; });
    for (var f in extra) if (extra[f] !== undefined) row[f] = extra[f];
    return row;
  }

  // Inline rows for a view, matching the server's chart values.
  Table.prototype.values = function (view, filters) {
    filters = filters.slice();
    var w = view.window || null;
    var measures = view.measures || [];
    var dims = view.dimensions || [];
    if (w && w.type === 'year') {
      filters.push({ op: 'range', attribute: view.temporal, min: w.year, max: w.year });
    }
    if (view.kind === 'Histogram') return this.histogram(measures[0], filters);
    if (view.kind === 'Scatter') return this.scatter(measures[0], measures[1], filters);
    if (w && w.type === 'yearOverYear') {
      var change = this.yearOverYear(measures[0], view.temporal, dims, w.year, filters);
      if (change === null) return [];
      if (view.kind === 'DataSummary') {
        var cur = 0, prev = 0;
        change.forEach(function (r) { cur += r.current; prev += r.previous; });
        return [{ value: cur - prev, previous: prev }];
      }
      var rows = change.map(function (r) {
        return { key: r.key, value: r.current - r.previous, previous: r.previous };
      });
      return applyLimit(rows, view.limit).map(function (r) {
        return dimRow(r.key, { value: r.value, previous: r.previous });
      });
    }
    if (w && w.type === 'yearlyChange') {
      return this.yearlyChange(measures[0], view.temporal, filters) || [];
    }
    if (view.kind === 'DataSummary') {
      var agg = this.aggregate(view.agg, measures[0] || null, [], filters);
      return [{ value: agg.length ? agg[0].value : null }];
    }
    var line = view.kind === 'Line';
    var parts = line
      ? [{ attr: view.temporal, bin: 'month' }]
      : dims.map(function (d) { return { attr: d, bin: null }; });
    var series = measures.length > 1;
    var list = measures.length ? measures : [null];
    var out = [];
    var self = this;
    list.forEach(function (m) {
      self.aggregate(view.agg, m, parts, filters).forEach(function (r) {
        out.push({ key: r.key, value: r.value, series: series ? m : undefined });
      });
    });
    return applyLimit(out, view.limit).map(function (r) {
      if (line) {
        var row = { t: r.key[0] + '-01' };
        if (r.series !== undefined) row.series = r.series;
        row.value = r.value;
        return row;
      }
      return dimRow(r.key, { series: r.series, value: r.value });
    });
  };

  var api = { Table: Table, HISTOGRAM_BINS: HISTOGRAM_BINS, SCATTER_ROW_CAP: SCATTER_ROW_CAP };
  if (typeof module !== 'undefined' && module.exports) module.exports = api;
  else root.MedleyAggregate = api;
})(this);
