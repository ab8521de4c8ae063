//! Task performance and group-fairness metrics.
//!
//! Fairness metrics compare a group `a` against its complement `ā` within
//! the view, for a chosen positive label:
//!
//! * EO = P(ŷ=pos | y=pos, s=a) − P(ŷ=pos | y=pos, s=ā)
//! * DI = P(ŷ=pos | s=a) − P(ŷ=pos | s=ā)
//! * PP = P(y=pos | ŷ=pos, s=a) − P(y=pos | ŷ=pos, s=ā)
//!
//! A Neutral prediction is never positive. Weighted F1, by contrast, is
//! computed only over records with a Favor/Against prediction. Undefined
//! values are errors, never zeros.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stance::{Direction, PredictedStance, Stance};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("{metric} is undefined for group {group:?}: {reason}")]
    Undefined {
        metric: Metric,
        group: String,
        reason: String,
    },
    #[error("{metric} needs a non-empty input")]
    EmptyInput { metric: Metric },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    WeightedF1,
    NeutralRate,
    #[serde(rename = "EO")]
    EqualOpportunity,
    #[serde(rename = "DI")]
    DemographicParity,
    #[serde(rename = "PP")]
    PredictiveParity,
    MeanAbsEO,
}

impl Metric {
    pub const FAIRNESS: [Metric; 3] = [
        Metric::EqualOpportunity,
        Metric::DemographicParity,
        Metric::PredictiveParity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::WeightedF1 => "WeightedF1",
            Metric::NeutralRate => "NeutralRate",
            Metric::EqualOpportunity => "EO",
            Metric::DemographicParity => "DI",
            Metric::PredictiveParity => "PP",
            Metric::MeanAbsEO => "MeanAbsEO",
        }
    }

    /// Closed range the metric's values live in.
    pub fn range(self) -> (f64, f64) {
        match self {
            Metric::WeightedF1 | Metric::MeanAbsEO => (0.0, 1.0),
            Metric::NeutralRate => (0.0, 100.0),
            Metric::EqualOpportunity | Metric::DemographicParity | Metric::PredictiveParity => {
                (-1.0, 1.0)
            }
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "WEIGHTEDF1" | "F1" => Ok(Metric::WeightedF1),
            "NEUTRALRATE" => Ok(Metric::NeutralRate),
            "EO" => Ok(Metric::EqualOpportunity),
            "DI" => Ok(Metric::DemographicParity),
            "PP" => Ok(Metric::PredictiveParity),
            "MEANABSEO" => Ok(Metric::MeanAbsEO),
            _ => Err(format!("unknown metric {s:?}")),
        }
    }
}

pub const OVERALL: &str = "overall";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub metric: Metric,
    pub group: String,
    pub direction: Option<Direction>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalItem {
    pub gold: Stance,
    pub prediction: PredictedStance,
    pub group: String,
}

impl EvalItem {
    pub fn new(gold: Stance, prediction: PredictedStance, group: impl Into<String>) -> Self {
        EvalItem {
            gold,
            prediction,
            group: group.into(),
        }
    }
}

/// Gold labels, predictions and group memberships for one evaluation pass.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EvalView {
    items: Vec<EvalItem>,
}

impl EvalView {
    pub fn new(items: Vec<EvalItem>) -> Self {
        EvalView { items }
    }

    pub fn items(&self) -> &[EvalItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// The view without Neutral predictions, for the drop-neutral fairness mode.
    pub fn without_neutral(&self) -> EvalView {
        EvalView::new(
            self.items
                .iter()
                .filter(|i| !i.prediction.is_neutral())
                .cloned()
                .collect(),
        )
    }

    /// Only the records of the listed groups, for pairwise comparisons.
    pub fn restricted_to(&self, groups: &[&str]) -> EvalView {
        EvalView::new(
            self.items
                .iter()
                .filter(|i| groups.contains(&i.group.as_str()))
                .cloned()
                .collect(),
        )
    }
}

impl FromIterator<EvalItem> for EvalView {
    fn from_iter<T: IntoIterator<Item = EvalItem>>(iter: T) -> Self {
        EvalView::new(iter.into_iter().collect())
    }
}

/// Support-weighted F1 over Favor and Against, Neutral predictions excluded.
pub fn weighted_f1(view: &EvalView) -> Result<MetricValue, MetricError> {
    // confusion[gold][pred] over the two decided classes
    let mut confusion = [[0usize; 2]; 2];
    let class = |s: Stance| match s {
        Stance::Favor => 0,
        Stance::Against => 1,
    };
    for item in &view.items {
        let pred = match item.prediction {
            PredictedStance::Favor => Stance::Favor,
            PredictedStance::Against => Stance::Against,
            PredictedStance::Neutral => continue,
        };
        confusion[class(item.gold)][class(pred)] += 1;
    }
    let total: usize = confusion.iter().flatten().sum();
    if total == 0 {
        return Err(MetricError::Undefined {
            metric: Metric::WeightedF1,
            group: OVERALL.into(),
            reason: "every prediction is Neutral".into(),
        });
    }
    let mut value = 0.0;
    for c in 0..2 {
        let tp = confusion[c][c];
        let fn_ = confusion[c][1 - c];
        let fp = confusion[1 - c][c];
        let support = tp + fn_;
        if support == 0 {
            continue;
        }
        let f1 = 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64;
        value += f1 * support as f64 / total as f64;
    }
    Ok(MetricValue {
        metric: Metric::WeightedF1,
        group: OVERALL.into(),
        direction: None,
        value,
    })
}

/// Percentage of Neutral predictions.
pub fn neutral_rate(view: &EvalView) -> Result<MetricValue, MetricError> {
    if view.is_empty() {
        return Err(MetricError::EmptyInput {
            metric: Metric::NeutralRate,
        });
    }
    let neutral = view.items.iter().filter(|i| i.prediction.is_neutral()).count();
    Ok(MetricValue {
        metric: Metric::NeutralRate,
        group: OVERALL.into(),
        direction: None,
        value: 100.0 * neutral as f64 / view.len() as f64,
    })
}

/// Conditional rate `hits / total` for the group and for its complement.
fn rate_gap<C, H>(
    view: &EvalView,
    group: &str,
    metric: Metric,
    condition: C,
    hit: H,
    empty_reason: &str,
) -> Result<f64, MetricError>
where
    C: Fn(&EvalItem) -> bool,
    H: Fn(&EvalItem) -> bool,
{
    let mut counts = [(0usize, 0usize); 2];
    for item in view.items.iter().filter(|i| condition(i)) {
        let side = usize::from(item.group != group);
        counts[side].1 += 1;
        if hit(item) {
            counts[side].0 += 1;
        }
    }
    let mut rates = [0.0; 2];
    for (side, &(hits, total)) in counts.iter().enumerate() {
        if total == 0 {
            let named = if side == 0 {
                group.to_string()
            } else {
                format!("not {group}")
            };
            return Err(MetricError::Undefined {
                metric,
                group: named,
                reason: empty_reason.to_string(),
            });
        }
        rates[side] = hits as f64 / total as f64;
    }
    Ok(rates[0] - rates[1])
}

fn fairness_value(metric: Metric, group: &str, direction: Direction, value: f64) -> MetricValue {
    MetricValue {
        metric,
        group: group.to_string(),
        direction: Some(direction),
        value,
    }
}

/// Difference in true-positive rates between `group` and the rest of the view.
pub fn equal_opportunity(
    view: &EvalView,
    group: &str,
    direction: Direction,
) -> Result<MetricValue, MetricError> {
    let pos = direction.positive();
    let value = rate_gap(
        view,
        group,
        Metric::EqualOpportunity,
        |i| i.gold == pos,
        |i| i.prediction.matches(pos),
        "no records with positive gold label",
    )?;
    Ok(fairness_value(Metric::EqualOpportunity, group, direction, value))
}

/// Difference in positive-prediction rates between `group` and the rest.
pub fn demographic_parity(
    view: &EvalView,
    group: &str,
    direction: Direction,
) -> Result<MetricValue, MetricError> {
    let pos = direction.positive();
    let value = rate_gap(
        view,
        group,
        Metric::DemographicParity,
        |_| true,
        |i| i.prediction.matches(pos),
        "no records",
    )?;
    Ok(fairness_value(Metric::DemographicParity, group, direction, value))
}

/// Difference in precision for the positive label between `group` and the rest.
pub fn predictive_parity(
    view: &EvalView,
    group: &str,
    direction: Direction,
) -> Result<MetricValue, MetricError> {
    let pos = direction.positive();
    let value = rate_gap(
        view,
        group,
        Metric::PredictiveParity,
        |i| i.prediction.matches(pos),
        |i| i.gold == pos,
        "no positive predictions",
    )?;
    Ok(fairness_value(Metric::PredictiveParity, group, direction, value))
}

pub fn fairness_metric(
    metric: Metric,
    view: &EvalView,
    group: &str,
    direction: Direction,
) -> Result<MetricValue, MetricError> {
    match metric {
        Metric::EqualOpportunity => equal_opportunity(view, group, direction),
        Metric::DemographicParity => demographic_parity(view, group, direction),
        Metric::PredictiveParity => predictive_parity(view, group, direction),
        other => panic!("{other} is not a group fairness metric"),
    }
}

/// Mean of |EO| across classes, datasets and directions.
pub fn mean_abs_eo<'a, I>(values: I) -> Result<MetricValue, MetricError>
where
    I: IntoIterator<Item = &'a MetricValue>,
{
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v.value.abs(), n + 1));
    if n == 0 {
        return Err(MetricError::EmptyInput {
            metric: Metric::MeanAbsEO,
        });
    }
    Ok(MetricValue {
        metric: Metric::MeanAbsEO,
        group: OVERALL.into(),
        direction: None,
        value: sum / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use PredictedStance as P;
    use Stance::{Against as A, Favor as F};

    fn view(rows: &[(Stance, PredictedStance, &str)]) -> EvalView {
        rows.iter().map(|&(g, p, s)| EvalItem::new(g, p, s)).collect()
    }

    /// `hits` of `n` gold-positive records predicted positive, the rest Against.
    fn tpr_block(group: &str, hits: usize, n: usize) -> Vec<EvalItem> {
        (0..n)
            .map(|i| EvalItem::new(F, if i < hits { P::Favor } else { P::Against }, group))
            .collect()
    }

    #[test]
    fn f1_perfect() {
        let v = view(&[(F, P::Favor, "a"), (A, P::Against, "a")]);
        assert_eq!(weighted_f1(&v).unwrap().value, 1.0);
    }

    #[test]
    fn f1_mixed() {
        let v = view(&[
            (F, P::Favor, "a"),
            (F, P::Against, "a"),
            (A, P::Against, "a"),
            (A, P::Against, "a"),
        ]);
        // 0.5 * 2/3 + 0.5 * 4/5
        assert!((weighted_f1(&v).unwrap().value - 11.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn f1_ignores_neutral() {
        let v = view(&[(F, P::Neutral, "a"), (A, P::Against, "a")]);
        assert_eq!(weighted_f1(&v).unwrap().value, 1.0);
        let all_neutral = view(&[(F, P::Neutral, "a")]);
        assert!(matches!(
            weighted_f1(&all_neutral),
            Err(MetricError::Undefined { .. })
        ));
    }

    #[test]
    fn neutral_rate_percentages() {
        let v = view(&[
            (F, P::Neutral, "a"),
            (F, P::Neutral, "a"),
            (A, P::Favor, "a"),
            (A, P::Against, "a"),
        ]);
        assert_eq!(neutral_rate(&v).unwrap().value, 50.0);
        let none = view(&[(F, P::Favor, "a")]);
        assert_eq!(neutral_rate(&none).unwrap().value, 0.0);
        let all = view(&[(F, P::Neutral, "a"), (A, P::Neutral, "b")]);
        assert_eq!(neutral_rate(&all).unwrap().value, 100.0);
        assert!(neutral_rate(&EvalView::default()).is_err());
    }

    #[test]
    fn eo_counts() {
        let mut items = tpr_block("a", 8, 10);
        items.extend(tpr_block("b", 5, 10));
        let v = EvalView::new(items);
        let eo = equal_opportunity(&v, "a", Direction::FavorAsPositive).unwrap();
        assert!((eo.value - 0.3).abs() < 1e-12);
        let swapped = equal_opportunity(&v, "b", Direction::FavorAsPositive).unwrap();
        assert!((swapped.value + 0.3).abs() < 1e-12);
    }

    #[test]
    fn eo_identical_behavior_is_zero() {
        let mut items = tpr_block("a", 6, 10);
        items.extend(tpr_block("b", 3, 5));
        let v = EvalView::new(items);
        assert_eq!(
            equal_opportunity(&v, "a", Direction::FavorAsPositive).unwrap().value,
            0.0
        );
    }

    #[test]
    fn eo_counts_neutral_as_not_positive() {
        let v = view(&[
            (F, P::Neutral, "a"),
            (F, P::Favor, "a"),
            (F, P::Favor, "b"),
            (F, P::Favor, "b"),
        ]);
        let eo = equal_opportunity(&v, "a", Direction::FavorAsPositive).unwrap();
        assert!((eo.value + 0.5).abs() < 1e-12);
        // drop-neutral mode removes the record instead
        let eo = equal_opportunity(&v.without_neutral(), "a", Direction::FavorAsPositive).unwrap();
        assert_eq!(eo.value, 0.0);
    }

    #[test]
    fn eo_undefined_without_positive_gold() {
        let v = view(&[(A, P::Favor, "a"), (F, P::Favor, "b")]);
        match equal_opportunity(&v, "a", Direction::FavorAsPositive) {
            Err(MetricError::Undefined { group, .. }) => assert_eq!(group, "a"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn di_counts() {
        let mut items: Vec<EvalItem> = (0..10)
            .map(|i| EvalItem::new(F, if i < 6 { P::Favor } else { P::Against }, "a"))
            .collect();
        items.extend((0..10).map(|i| EvalItem::new(A, if i < 4 { P::Favor } else { P::Neutral }, "b")));
        let v = EvalView::new(items);
        let di = demographic_parity(&v, "a", Direction::FavorAsPositive).unwrap();
        assert!((di.value - 0.2).abs() < 1e-12);

        let all_pos = view(&[(F, P::Favor, "a"), (A, P::Favor, "b")]);
        assert_eq!(
            demographic_parity(&all_pos, "a", Direction::FavorAsPositive).unwrap().value,
            0.0
        );
        let one_group = view(&[(F, P::Favor, "a")]);
        assert!(demographic_parity(&one_group, "a", Direction::FavorAsPositive).is_err());
    }

    #[test]
    fn pp_counts() {
        let mut items: Vec<EvalItem> = (0..5)
            .map(|i| EvalItem::new(if i < 4 { F } else { A }, P::Favor, "a"))
            .collect();
        items.extend((0..4).map(|i| EvalItem::new(if i < 2 { F } else { A }, P::Favor, "b")));
        let v = EvalView::new(items);
        let pp = predictive_parity(&v, "a", Direction::FavorAsPositive).unwrap();
        assert!((pp.value - 0.3).abs() < 1e-12);

        let no_pos_b = view(&[(F, P::Favor, "a"), (F, P::Against, "b"), (F, P::Neutral, "b")]);
        match predictive_parity(&no_pos_b, "a", Direction::FavorAsPositive) {
            Err(MetricError::Undefined { group, .. }) => assert_eq!(group, "not a"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn against_direction_uses_against_as_positive() {
        let v = view(&[
            (A, P::Against, "a"),
            (A, P::Against, "a"),
            (A, P::Favor, "b"),
            (A, P::Against, "b"),
        ]);
        let eo = equal_opportunity(&v, "a", Direction::AgainstAsPositive).unwrap();
        assert!((eo.value - 0.5).abs() < 1e-12);
        assert_eq!(eo.direction, Some(Direction::AgainstAsPositive));
    }

    #[test]
    fn pairwise_restriction() {
        let v = view(&[
            (F, P::Favor, "a"),
            (F, P::Against, "b"),
            (F, P::Favor, "c"),
        ]);
        let pair = v.restricted_to(&["a", "b"]);
        assert_eq!(
            equal_opportunity(&pair, "a", Direction::FavorAsPositive).unwrap().value,
            1.0
        );
        assert_eq!(
            equal_opportunity(&v, "a", Direction::FavorAsPositive).unwrap().value,
            0.5
        );
    }

    #[test]
    fn mean_abs_eo_values() {
        let eo = |v: f64| MetricValue {
            metric: Metric::EqualOpportunity,
            group: "a".into(),
            direction: Some(Direction::FavorAsPositive),
            value: v,
        };
        let vals = [eo(0.1), eo(-0.2), eo(0.3)];
        assert!((mean_abs_eo(&vals).unwrap().value - 0.2).abs() < 1e-12);
        assert_eq!(mean_abs_eo(&[eo(0.0), eo(0.0)]).unwrap().value, 0.0);
        assert!((mean_abs_eo(&[eo(-0.4)]).unwrap().value - 0.4).abs() < 1e-12);
        assert!(mean_abs_eo(&[]).is_err());
    }
}
