"""
submersion 测试
"""
