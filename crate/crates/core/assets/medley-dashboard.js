// Renders an exported dashboard and wires its interaction links.
(function () {
  'use strict';

  var ROW_PX = 90;
  var payload = JSON.parse(document.getElementById('medley-data').textContent);
  var table = new MedleyAggregate.Table(payload);
  var grid = document.getElementById('grid');

  var elements = {};
  var views = {};
  // Predicates currently selected in each source element.
  var selections = {};
  // Clicked (attribute, value) pairs per view source, toggled on click.
  var marks = {};

  payload.elements.forEach(function (el) {
    elements[el.id] = el;
    var cell = document.createElement('div');
    cell.className = 'cell';
    cell.style.gridColumn = (el.geometry.x + 1) + ' / span ' + el.geometry.w;
    cell.style.gridRow = (el.geometry.y + 1) + ' / span ' + el.geometry.h;
    cell.style.height = (el.geometry.h * ROW_PX - 12) + 'px';
    grid.appendChild(cell);
    el.container = cell;
  });

  function activeLinks(sourceId) {
    return payload.links.filter(function (l) {
      return l.sourceId === sourceId && l.valid && l.activeMode;
    });
  }

  function incoming(targetId, mode) {
    var out = [];
    payload.links.forEach(function (l) {
      if (l.targetId === targetId && l.activeMode === mode && selections[l.sourceId]) {
        out = out.concat(selections[l.sourceId]);
      }
    });
    return out;
  }

  // A single-year filter on a year-sliced view's temporal attribute moves
  // its year instead of removing rows.
  function bindYear(view, filters) {
    var w = view.window;
    var rest = [];
    var bound = view;
    filters.forEach(function (p) {
      if (w && (w.type === 'yearOverYear' || w.type === 'year') && p.op === 'range' &&
          p.attribute === view.temporal && typeof p.min === 'number' && p.min === p.max) {
        bound = Object.assign({}, view, { window: { type: w.type, year: p.min } });
      } else {
        rest.push(p);
      }
    });
    return { view: bound, filters: rest };
  }

  function datumMatches(datum, predicates, fields) {
    var byAttr = {};
    Object.keys(fields).forEach(function (f) { byAttr[fields[f]] = f; });
    return predicates.every(function (p) {
      var f = byAttr[p.attribute];
      if (f !== undefined && datum[f] !== undefined) {
        var v = datum[f];
        if (p.op === 'range') return table.inRange(p.attribute, v, p.min, p.max);
        var vals = p.op === 'eq' ? [p.value] : p.values;
        return vals.some(function (s) { return table.matchesValue(p.attribute, v, s); });
      }
      if (datum.row !== undefined) return table.matches(p, datum.row);
      return true;
    });
  }

  function withOpacity(encoding) {
    encoding = Object.assign({}, encoding);
    encoding.opacity = { condition: { test: 'datum.__hl', value: 1 }, value: 0.2 };
    return encoding;
  }

  function buildSpec(el) {
    var spec = JSON.parse(JSON.stringify(el.chart));
    var meta = spec.usermeta.medley;
    var b = bindYear(meta.view, incoming(el.id, 'filter'));
    var values = table.values(b.view, b.filters);
    var highlight = incoming(el.id, 'highlight');
    if (highlight.length) {
      values.forEach(function (d) { d.__hl = datumMatches(d, highlight, meta.fields); });
      if (spec.layer) {
        spec.layer.forEach(function (l) { l.encoding = withOpacity(l.encoding); });
      } else {
        spec.encoding = withOpacity(spec.encoding);
      }
    }
    if (spec.transform && spec.transform[0] && spec.transform[0].lookup) {
      spec.transform[0].from.data.values = values;
      spec.transform[0].from.fields.push('__hl');
    } else {
      spec.data = { values: values };
    }
    return spec;
  }

  function render(id) {
    var el = elements[id];
    if (el.element.element !== 'view') return;
    if (views[id]) views[id].finalize();
    el.container.innerHTML = '';
    var vg = vegaLite.compile(buildSpec(el)).spec;
    var view = new vega.View(vega.parse(vg), { renderer: 'svg', container: el.container, hover: true });
    view.addEventListener('click', function (_, item) { onMarkClick(id, item); });
    views[id] = view;
    view.runAsync();
  }

  function select(sourceId, predicates) {
    selections[sourceId] = predicates.length ? predicates : null;
    activeLinks(sourceId).forEach(function (l) { render(l.targetId); });
  }

  function onMarkClick(id, item) {
    var meta = elements[id].chart.usermeta.medley;
    var datum = item && item.datum;
    var list = marks[id] || [];
    if (!datum) {
      list = [];
    } else {
      Object.keys(meta.fields).forEach(function (f) {
        if (f === 't' || datum[f] === undefined || datum[f] === null) return;
        var attr = meta.fields[f];
        var i = list.findIndex(function (m) { return m.attribute === attr && m.value === datum[f]; });
        if (i >= 0) list.splice(i, 1); else list.push({ attribute: attr, value: datum[f] });
      });
    }
    marks[id] = list;
    var order = [];
    var byAttr = {};
    list.forEach(function (m) {
      if (!byAttr[m.attribute]) { byAttr[m.attribute] = []; order.push(m.attribute); }
      byAttr[m.attribute].push(m.value);
    });
    select(id, order.map(function (a) {
      var vals = byAttr[a];
      return vals.length === 1 ? { op: 'eq', attribute: a, value: vals[0] } : { op: 'in', attribute: a, values: vals };
    }));
  }

  function label(text) {
    var l = document.createElement('label');
    l.textContent = text;
    return l;
  }

  function renderWidget(el) {
    var w = el.element;
    var box = el.container;
    box.classList.add('widget');
    box.appendChild(label(w.attribute));
    var attr = w.attribute;
    if (w.kind === 'YearPicker') {
      var sel = document.createElement('select');
      sel.appendChild(new Option('All years', ''));
      (payload.years[attr] || []).forEach(function (y) { sel.appendChild(new Option(String(y), String(y))); });
      sel.addEventListener('change', function () {
        select(el.id, sel.value ? [{ op: 'range', attribute: attr, min: Number(sel.value), max: Number(sel.value) }] : []);
      });
      box.appendChild(sel);
    } else if (w.kind === 'RangeSlider') {
      var years = payload.years[attr];
      var bounds = years ? [years[0], years[years.length - 1]] : payload.ranges[attr];
      var lo = document.createElement('input');
      var hi = document.createElement('input');
      [lo, hi].forEach(function (input, i) {
        input.type = 'number';
        input.value = bounds[i];
        input.step = years ? 1 : 'any';
        input.addEventListener('change', function () {
          var a = Number(lo.value), b = Number(hi.value);
          var full = a <= bounds[0] && b >= bounds[1];
          select(el.id, full || a > b ? [] : [{ op: 'range', attribute: attr, min: a, max: b }]);
        });
        box.appendChild(input);
      });
    } else {
      var multi = document.createElement('select');
      multi.multiple = true;
      (payload.categories[attr] || []).forEach(function (v) { multi.appendChild(new Option(v, v)); });
      multi.addEventListener('change', function () {
        var vals = Array.prototype.filter.call(multi.options, function (o) { return o.selected; })
          .map(function (o) { return o.value; });
        select(el.id, vals.length ? [{ op: 'in', attribute: attr, values: vals }] : []);
      });
      box.appendChild(multi);
    }
  }

  payload.elements.forEach(function (el) {
    if (el.element.element === 'widget') renderWidget(el); else render(el.id);
  });
})();
