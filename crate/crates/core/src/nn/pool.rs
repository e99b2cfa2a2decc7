use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// Per-channel spatial mean: `B x C x H x W -> B x C`, for any `H, W`.
pub fn global_average_pool<T: Scalar>(input: &Tensor<T>) -> Result<Tensor<T>> {
    let (b, c, h, w) = input.dims4()?;
    let area = h * w;
    let inv = T::lit(1.0 / area as f64);
    let data = input
        .data()
        .chunks(area)
        .map(|plane| plane.iter().copied().sum::<T>() * inv)
        .collect();
    Tensor::new(vec![b, c], data)
}

/// Spreads each pooled gradient uniformly over the `H x W` positions it averaged.
pub fn global_average_pool_backward<T: Scalar>(
    input_shape: &[usize],
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>> {
    let [b, c, h, w] = *input_shape else {
        return Err(Error::Shape(format!(
            "pool input shape must be rank 4, got {input_shape:?}"
        )));
    };
    if grad_out.shape() != [b, c] {
        return Err(Error::Shape(format!(
            "pool grad_out has shape {:?}, expected [{b}, {c}]",
            grad_out.shape()
        )));
    }
    let area = h * w;
    let inv = T::lit(1.0 / area as f64);
    let mut data = Vec::with_capacity(b * c * area);
    for &g in grad_out.data() {
        data.extend(std::iter::repeat_n(g * inv, area));
    }
    Tensor::new(input_shape.to_vec(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mean_of_constant_and_small_plane() {
        let x = Tensor::<f64>::full(&[2, 3, 5, 4], 7.0).unwrap();
        assert!(global_average_pool(&x).unwrap().data().iter().all(|&v| (v - 7.0).abs() < 1e-12));
        let y = Tensor::<f64>::new(vec![1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(global_average_pool(&y).unwrap().data(), &[2.5]);
    }

    #[test]
    fn same_constant_channels_pool_identically_at_any_size() {
        let fill = |h, w| {
            Tensor::<f64>::from_fn(&[1, 3, h, w], |i| [0.5, -2.0, 3.25][i / (h * w)]).unwrap()
        };
        let a = global_average_pool(&fill(8, 8)).unwrap();
        let b = global_average_pool(&fill(31, 17)).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn output_shape_is_independent_of_spatial_size(h in 1usize..=64, w in 1usize..=64, b in 1usize..3, c in 1usize..4) {
            let x = Tensor::<f32>::zeros(&[b, c, h, w]).unwrap();
            let y = global_average_pool(&x).unwrap();
            prop_assert_eq!(y.shape(), &[b, c]);
        }
    }
}
