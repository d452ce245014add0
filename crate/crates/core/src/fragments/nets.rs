//! Connected components of a stable set under strong lateral links.

use super::field::CorticalField;

/// Stable units grouped into connected components.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoherentNet {
    /// Member units of each component, ascending within a component.
    /// Components are ordered by size (largest first), ties by lowest unit id.
    pub components: Vec<Vec<usize>>,
}

impl CoherentNet {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn unit_count(&self) -> usize {
        self.components.iter().map(Vec::len).sum()
    }

    /// Component index of every unit of the sheet, `None` outside the net.
    pub fn labels(&self, unit_count: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; unit_count];
        for (k, comp) in self.components.iter().enumerate() {
            for &u in comp {
                out[u] = Some(k);
            }
        }
        out
    }
}

/// Labels `units` into components, joining two units when the stronger of
/// their directed lateral weights is at least `w_support`.
pub fn coherent_components(units: &[usize], field: &CorticalField, w_support: f64) -> CoherentNet {
    coherent_components_where(units, field, w_support, |_, _| true)
}

/// Like [`coherent_components`] with an extra edge filter.
pub fn coherent_components_where<P>(units: &[usize], field: &CorticalField, w_support: f64, allow: P) -> CoherentNet
where
    P: Fn(usize, usize) -> bool,
{
    let n = field.sheet().unit_count();
    let mut index = vec![usize::MAX; n];
    for (i, &u) in units.iter().enumerate() {
        index[u] = i;
    }
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); units.len()];
    for (i, &u) in units.iter().enumerate() {
        for s in field.lateral().incoming(u) {
            let j = index[s.pre as usize];
            if j != usize::MAX && s.weight >= w_support && allow(u, s.pre as usize) {
                adjacency[i].push(j);
                adjacency[j].push(i);
            }
        }
    }
    let mut seen = vec![false; units.len()];
    let mut components = Vec::new();
    for start in 0..units.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut comp = Vec::new();
        while let Some(i) = stack.pop() {
            comp.push(units[i]);
            for &j in &adjacency[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    components.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    CoherentNet { components }
}
