use std::collections::HashMap;

use super::{Builder, Circuit, CircuitError, GateId, GateKind};

/// A depth-normalized circuit with its layering.
#[derive(Clone, Debug)]
pub struct NormalForm {
    pub circuit: Circuit,
    /// Distance from the single `1` gate for every gate of `circuit`;
    /// `None` for the shared zero gate.
    pub levels: Vec<Option<u32>>,
    /// Image of each input gate, `None` for gates not feeding the output.
    pub gate_map: Vec<Option<GateId>>,
}

/// Rewrites a `{0, 1, +, -, ×}` circuit so that it has a single `1` gate and
/// every edge goes from level `l` to level `l + 1`, where level is the
/// distance from the `1` gate. Gates that cannot be reached from a `1`
/// gate evaluate to 0 and are merged into one zero gate, which is exempt
/// from layering. Short edges are padded with `x + 0` chains, shared per
/// (gate, level).
pub fn depth_normalize(circuit: &Circuit) -> Result<Circuit, CircuitError> {
    depth_normalize_traced(circuit).map(|n| n.circuit)
}

pub fn depth_normalize_traced(circuit: &Circuit) -> Result<NormalForm, CircuitError> {
    let gates = circuit.gates();
    for (i, g) in gates.iter().enumerate() {
        if !matches!(
            g.kind,
            GateKind::ConstZero
                | GateKind::ConstOne
                | GateKind::Add
                | GateKind::Sub
                | GateKind::Mul
        ) {
            return Err(CircuitError::Unsupported {
                gate: GateId(i as u32),
                kind: g.kind.mnemonic(),
            });
        }
    }
    let n = gates.len();
    let mut live = vec![false; n];
    live[circuit.output().index()] = true;
    for i in (0..n).rev() {
        if live[i] {
            for x in &gates[i].inputs {
                live[x.index()] = true;
            }
        }
    }
    // Level of each old gate reachable from a `1` gate.
    let mut level: Vec<Option<u32>> = vec![None; n];
    for (i, g) in gates.iter().enumerate() {
        level[i] = match g.kind {
            GateKind::ConstOne => Some(0),
            GateKind::ConstZero => None,
            _ => g
                .inputs
                .iter()
                .filter_map(|x| level[x.index()])
                .max()
                .map(|l| l + 1),
        };
    }

    let mut b = Builder::new(circuit.basis().clone());
    let mut new_levels: Vec<Option<u32>> = Vec::new();
    let mut gate_map = vec![None; n];
    let out = circuit.output().index();
    if level[out].is_none() {
        let z = b.zero();
        gate_map[out] = Some(z);
        return Ok(NormalForm {
            circuit: b.finish(z)?,
            levels: vec![None],
            gate_map,
        });
    }
    let one = b.one();
    new_levels.push(Some(0));
    let mut zero: Option<GateId> = None;
    // (old gate, level) -> padded copy
    let mut pads: HashMap<(usize, u32), GateId> = HashMap::new();

    for i in 0..n {
        if !live[i] {
            continue;
        }
        let Some(l) = level[i] else {
            let z = *zero.get_or_insert_with(|| {
                new_levels.push(None);
                b.zero()
            });
            gate_map[i] = Some(z);
            continue;
        };
        if l == 0 {
            gate_map[i] = Some(one);
            continue;
        }
        let mut inputs = Vec::new();
        for x in &gates[i].inputs {
            let xi = x.index();
            let id = match level[xi] {
                None => *zero.get_or_insert_with(|| {
                    new_levels.push(None);
                    b.zero()
                }),
                Some(lx) => {
                    let mut cur = gate_map[xi].unwrap();
                    for target in lx + 1..l {
                        cur = match pads.get(&(xi, target)) {
                            Some(&p) => p,
                            None => {
                                let z = *zero.get_or_insert_with(|| {
                                    new_levels.push(None);
                                    b.zero()
                                });
                                let p = b.add(cur, z);
                                new_levels.push(Some(target));
                                pads.insert((xi, target), p);
                                p
                            }
                        };
                    }
                    cur
                }
            };
            inputs.push(id);
        }
        let id = b.push(gates[i].kind.clone(), inputs);
        new_levels.push(Some(l));
        gate_map[i] = Some(id);
    }
    let output = gate_map[out].unwrap();
    Ok(NormalForm {
        circuit: b.finish(output)?,
        levels: new_levels,
        gate_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse;
    use crate::eval::exact::eval_rational;
    use crate::poly::rat;

    fn layered(nf: &NormalForm) -> bool {
        nf.circuit
            .gates()
            .iter()
            .enumerate()
            .all(|(i, g)| match nf.levels[i] {
                None | Some(0) => true,
                Some(l) => g
                    .inputs
                    .iter()
                    .all(|x| nf.levels[x.index()].is_none() || nf.levels[x.index()] == Some(l - 1)),
            })
    }

    #[test]
    fn single_one() {
        let c = parse("g0 = const 1\nout g0").unwrap();
        let nf = depth_normalize_traced(&c).unwrap();
        assert_eq!(nf.circuit.size(), 1);
        assert_eq!(eval_rational(&nf.circuit).unwrap(), rat(1));
    }

    #[test]
    fn mixed_depths_are_padded() {
        // (1+1)*1 + 1
        let c =
            parse("g0 = const 1\ng1 = add g0 g0\ng2 = mul g1 g0\ng3 = add g2 g0\nout g3").unwrap();
        let nf = depth_normalize_traced(&c).unwrap();
        assert!(layered(&nf));
        assert_eq!(eval_rational(&nf.circuit).unwrap(), rat(3));
        assert!(nf.circuit.size() <= c.size() + c.size() * c.size());
    }

    #[test]
    fn unreachable_collapses_to_zero() {
        let c = parse("g0 = const 0\ng1 = mul g0 g0\nout g1").unwrap();
        let nf = depth_normalize_traced(&c).unwrap();
        assert_eq!(nf.circuit.size(), 1);
        assert_eq!(nf.circuit.gates()[0].kind, GateKind::ConstZero);
    }

    #[test]
    fn rejects_other_gates() {
        let c = parse("g0 = const 1\ng1 = root1 g0 g0\nout g1").unwrap();
        assert!(depth_normalize(&c).is_err());
    }
}
