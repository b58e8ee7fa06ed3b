//! Span-level micro-averaged precision, recall and F1, overall and per type.
//!
//! A predicted span counts as a true positive only when its boundaries and
//! type both match a gold span exactly.

use std::collections::HashSet;

use crate::corpus::{EntitySpan, EntityType, ENTITY_TYPES};
use crate::error::Error;

/// Pooled counts for one slice of the evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub true_positive: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl Counts {
    pub fn precision(&self) -> f64 {
        if self.predicted == 0 {
            0.0
        } else {
            self.true_positive as f64 / self.predicted as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.gold == 0 {
            0.0
        } else {
            self.true_positive as f64 / self.gold as f64
        }
    }

    pub fn f1(&self) -> f64 {
        let p = self.precision();
        let r = self.recall();
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

/// Per-type and overall counts with derived P/R/F1.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EvalReport {
    pub per_type: [Counts; 5],
    pub overall: Counts,
}

impl EvalReport {
    pub fn type_counts(&self, t: EntityType) -> &Counts {
        &self.per_type[t.code()]
    }

    /// Fixed-width table: one row per entity type plus overall, P/R/F1 to two
    /// decimals on a 0-100 scale.
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<10} {:>8} {:>8} {:>8}\n",
            "type", "P", "R", "F1"
        ));
        let names = ["disease", "symptom", "treatment", "exam", "body"];
        for (i, name) in names.iter().enumerate() {
            let c = &self.per_type[i];
            out.push_str(&format!(
                "{:<10} {:>8.2} {:>8.2} {:>8.2}\n",
                name,
                100.0 * c.precision(),
                100.0 * c.recall(),
                100.0 * c.f1()
            ));
        }
        out.push_str(&format!(
            "{:<10} {:>8.2} {:>8.2} {:>8.2}\n",
            "overall",
            100.0 * self.overall.precision(),
            100.0 * self.overall.recall(),
            100.0 * self.overall.f1()
        ));
        out
    }
}

/// Micro-averaged evaluation over sentence-aligned gold and predicted spans.
pub fn micro_prf(
    gold: &[Vec<EntitySpan>],
    pred: &[Vec<EntitySpan>],
) -> Result<EvalReport, Error> {
    if gold.len() != pred.len() {
        return Err(Error::Eval(format!(
            "gold has {} sentences, predictions have {}",
            gold.len(),
            pred.len()
        )));
    }
    let mut report = EvalReport::default();
    for (g, p) in gold.iter().zip(pred) {
        let gold_set: HashSet<EntitySpan> = g.iter().copied().collect();
        for span in p {
            let c = &mut report.per_type[span.etype.code()];
            c.predicted += 1;
            if gold_set.contains(span) {
                c.true_positive += 1;
            }
        }
        for span in g {
            report.per_type[span.etype.code()].gold += 1;
        }
    }
    for t in ENTITY_TYPES {
        let c = report.per_type[t.code()];
        report.overall.true_positive += c.true_positive;
        report.overall.predicted += c.predicted;
        report.overall.gold += c.gold;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::EntityType::*;

    fn span(s: usize, e: usize, t: EntityType) -> EntitySpan {
        EntitySpan::new(s, e, t)
    }

    #[test]
    fn perfect_match() {
        let gold = vec![vec![span(0, 1, Body), span(3, 3, Symptom)]];
        let r = micro_prf(&gold, &gold).unwrap();
        assert_eq!(r.overall.precision(), 1.0);
        assert_eq!(r.overall.recall(), 1.0);
        assert_eq!(r.overall.f1(), 1.0);
    }

    #[test]
    fn hand_computed_case() {
        // 2 gold, 3 predicted, exactly 1 matching -> P = 1/3, R = 1/2, F1 = 0.4
        let gold = vec![vec![span(0, 1, Body), span(3, 4, Symptom)]];
        let pred = vec![vec![span(0, 1, Body), span(6, 7, Body), span(9, 9, Exam)]];
        let r = micro_prf(&gold, &pred).unwrap();
        assert!((r.overall.precision() - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.overall.recall() - 0.5).abs() < 1e-12);
        assert!((r.overall.f1() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn wrong_type_is_both_fp_and_fn() {
        let gold = vec![vec![span(0, 1, Body)]];
        let pred = vec![vec![span(0, 1, Symptom)]];
        let r = micro_prf(&gold, &pred).unwrap();
        assert_eq!(r.overall.true_positive, 0);
        assert_eq!(r.overall.predicted, 1);
        assert_eq!(r.overall.gold, 1);
        assert_eq!(r.overall.f1(), 0.0);
    }

    #[test]
    fn swap_symmetry() {
        let gold = vec![vec![span(0, 1, Body), span(3, 4, Symptom)], vec![span(2, 2, Exam)]];
        let pred = vec![vec![span(0, 1, Body), span(5, 6, Body)], vec![]];
        let fwd = micro_prf(&gold, &pred).unwrap();
        let rev = micro_prf(&pred, &gold).unwrap();
        assert!((fwd.overall.precision() - rev.overall.recall()).abs() < 1e-12);
        assert!((fwd.overall.recall() - rev.overall.precision()).abs() < 1e-12);
        assert!((fwd.overall.f1() - rev.overall.f1()).abs() < 1e-12);
    }

    #[test]
    fn partition_invariance() {
        let g1 = vec![span(0, 1, Body)];
        let g2 = vec![span(3, 4, Symptom), span(6, 6, Exam)];
        let p1 = vec![span(0, 1, Body)];
        let p2 = vec![span(3, 4, Body)];
        let joined = micro_prf(&[g1.clone(), g2.clone()], &[p1.clone(), p2.clone()]).unwrap();
        let mut merged_gold = g1;
        let mut offset_g2: Vec<EntitySpan> =
            g2.iter().map(|s| span(s.start + 100, s.end + 100, s.etype)).collect();
        merged_gold.append(&mut offset_g2);
        let mut merged_pred = p1;
        let mut offset_p2: Vec<EntitySpan> =
            p2.iter().map(|s| span(s.start + 100, s.end + 100, s.etype)).collect();
        merged_pred.append(&mut offset_p2);
        let merged = micro_prf(&[merged_gold], &[merged_pred]).unwrap();
        assert_eq!(joined.overall, merged.overall);
    }

    #[test]
    fn per_type_sums_equal_overall() {
        let gold = vec![vec![span(0, 1, Body), span(3, 4, Symptom)]];
        let pred = vec![vec![span(0, 1, Body), span(3, 4, Exam), span(8, 8, Body)]];
        let r = micro_prf(&gold, &pred).unwrap();
        let tp: usize = r.per_type.iter().map(|c| c.true_positive).sum();
        assert_eq!(tp, r.overall.true_positive);
    }

    #[test]
    fn empty_sides_use_zero_convention() {
        let r = micro_prf(&[vec![]], &[vec![span(0, 0, Body)]]).unwrap();
        assert_eq!(r.overall.recall(), 0.0);
        assert_eq!(r.overall.f1(), 0.0);
        let r = micro_prf(&[vec![span(0, 0, Body)]], &[vec![]]).unwrap();
        assert_eq!(r.overall.precision(), 0.0);
        assert_eq!(r.overall.f1(), 0.0);
    }

    #[test]
    fn sentence_count_mismatch_errors() {
        assert!(micro_prf(&[vec![]], &[]).is_err());
    }

    #[test]
    fn table_formats_two_decimals() {
        let gold = vec![vec![span(0, 1, Body), span(3, 4, Body)]];
        let pred = vec![vec![span(0, 1, Body), span(6, 7, Body), span(9, 9, Body)]];
        let table = micro_prf(&gold, &pred).unwrap().table();
        assert!(table.contains("33.33"), "{table}");
        assert!(table.contains("50.00"), "{table}");
        assert!(table.contains("40.00"), "{table}");
    }
}
