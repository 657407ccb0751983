use std::collections::HashMap;

use indexmap::IndexMap;

use super::{AttributeAssignment, AttributeSlot, CollectionTemplate};
use crate::canvas::{ChartKind, ViewSpec};
use crate::dataset::{AggFn, AttrType, AttributeMeta, Dataset};
use crate::interestingness::{raw_interestingness, MetricParams};

/// Inputs shared by every template enumerated in one recommendation pass.
#[derive(Debug, Clone, Copy)]
pub struct EnumerationContext<'a> {
    pub dataset: &'a Dataset,
    /// Attributes of interest, explicit first.
    pub interest: &'a [String],
    pub explicit: &'a [String],
    pub params: &'a MetricParams,
    pub cap: usize,
}

/// Whether an attribute can fill a slot.
///
/// Slots with `minYears >= 2` also need two consecutive years so a
/// year-over-year comparison exists.
pub fn slot_compatible(slot: &AttributeSlot, attr: &AttributeMeta, ds: &Dataset) -> bool {
    if attr.attr_type != slot.slot_type {
        return false;
    }
    match slot.min_years {
        Some(min) if min >= 2 => {
            let years = ds.years(&attr.name);
            years.len() >= min && years.iter().any(|y| years.contains(&(y - 1)))
        }
        Some(min) => ds.years(&attr.name).len() >= min,
        None => true,
    }
}

/// Best single-view raw interestingness of an attribute, used to order
/// candidates for secondary slots.
pub fn attribute_order_score(ds: &Dataset, attr: &AttributeMeta, explicit: &[String], params: &MetricParams) -> f64 {
    let view = match attr.attr_type {
        AttrType::Quantitative => ViewSpec::new(ChartKind::Histogram, AggFn::Count).measure(&attr.name),
        AttrType::Categorical | AttrType::Geographic => {
            ViewSpec::new(ChartKind::Bar, AggFn::Count).dimension(&attr.name)
        }
        AttrType::Temporal => ViewSpec::new(ChartKind::Line, AggFn::Count).over_time(&attr.name),
    };
    raw_interestingness(&view, ds, explicit, params).map_or(0.0, |s| s.raw)
}

/// Enumerates attribute sets for a template.
///
/// Primary slots take attributes of interest in priority order; only when
/// those run out are the remaining compatible attributes enumerated.
/// Secondary slots take every combination of as many compatible attributes as
/// they can hold, drawn from the attributes of interest first and then the
/// rest by descending [`attribute_order_score`]. No attribute is bound twice.
/// Output is lexicographic in that order and truncated to `ctx.cap`.
pub fn enumerate_attribute_sets(template: &CollectionTemplate, ctx: &EnumerationContext<'_>) -> Vec<AttributeAssignment> {
    let ds = ctx.dataset;
    let mut scores: HashMap<&str, f64> = HashMap::new();
    let mut others: Vec<&AttributeMeta> = ds
        .attributes()
        .iter()
        .filter(|a| !ctx.interest.contains(&a.name))
        .collect();
    let needed: Vec<AttrType> = template.slots.iter().map(|s| s.slot_type).collect();
    for a in &others {
        if needed.contains(&a.attr_type) {
            scores.insert(&a.name, attribute_order_score(ds, a, ctx.explicit, ctx.params));
        }
    }
    // Stable: equal scores keep column order.
    others.sort_by(|a, b| {
        let sa = scores.get(a.name.as_str()).copied().unwrap_or(0.0);
        let sb = scores.get(b.name.as_str()).copied().unwrap_or(0.0);
        sb.total_cmp(&sa)
    });
    let interest: Vec<&AttributeMeta> = ctx.interest.iter().filter_map(|n| ds.attribute(n)).collect();

    let order: Vec<&AttributeSlot> = template
        .slots
        .iter()
        .filter(|s| s.primary)
        .chain(template.slots.iter().filter(|s| !s.primary))
        .collect();

    let mut walker = Walker {
        template,
        ds,
        order: &order,
        interest: &interest,
        others: &others,
        cap: ctx.cap,
        out: Vec::new(),
    };
    if ctx.cap > 0 {
        walker.walk(0, &mut Vec::new());
    }
    walker.out
}

struct Walker<'a> {
    template: &'a CollectionTemplate,
    ds: &'a Dataset,
    order: &'a [&'a AttributeSlot],
    interest: &'a [&'a AttributeMeta],
    others: &'a [&'a AttributeMeta],
    cap: usize,
    out: Vec<AttributeAssignment>,
}

impl Walker<'_> {
    /// Returns false once the cap is reached.
    fn walk(&mut self, depth: usize, chosen: &mut Vec<Vec<String>>) -> bool {
        if depth == self.order.len() {
            self.emit(chosen);
            return self.out.len() < self.cap;
        }
        let slot = self.order[depth];
        let used = |name: &str| chosen.iter().flatten().any(|c| c == name);
        let fits = |a: &&&AttributeMeta| slot_compatible(slot, a, self.ds) && !used(&a.name);
        let from_interest: Vec<String> = self.interest.iter().filter(fits).map(|a| a.name.clone()).collect();
        let from_others: Vec<String> = self.others.iter().filter(fits).map(|a| a.name.clone()).collect();
        let m = slot.multiplicity;

        let (fixed, pool, k) = if slot.primary {
            if from_interest.len() >= m {
                (from_interest[..m].to_vec(), Vec::new(), 0)
            } else {
                let need = m - from_interest.len();
                if from_others.len() < need {
                    return true;
                }
                (from_interest, from_others, need)
            }
        } else {
            let pool: Vec<String> = from_interest.into_iter().chain(from_others).collect();
            let k = m.min(pool.len());
            (Vec::new(), pool, k)
        };

        let mut keep_going = true;
        for_each_combination(pool.len(), k, |idx| {
            let mut pick = fixed.clone();
            pick.extend(idx.iter().map(|&i| pool[i].clone()));
            chosen.push(pick);
            keep_going = self.walk(depth + 1, chosen);
            chosen.pop();
            keep_going
        });
        keep_going
    }

    fn emit(&mut self, chosen: &[Vec<String>]) {
        let mut map = IndexMap::new();
        for slot in &self.template.slots {
            let pos = self.order.iter().position(|s| s.id == slot.id).expect("slot is ordered");
            map.insert(slot.id.clone(), chosen[pos].clone());
        }
        self.out.push(AttributeAssignment(map));
    }
}

/// Calls `f` with each k-combination of `0..n` in lexicographic order until
/// it returns false.
fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> bool) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if !f(&idx) {
            return;
        }
        // Rightmost index that can still advance.
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
