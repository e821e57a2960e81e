"""
verify 测试
"""
